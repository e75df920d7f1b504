///
/// \file fft.hpp
///
/// Iterative radix-2 complex FFT used by the Hankel convolution kernels.
///
/// Forward transform is unnormalized, the inverse carries the 1/N factor.
///
#ifndef SCALHT_FFT_HPP
#define SCALHT_FFT_HPP

#include <cmath>
#include <complex>
#include <vector>

#include <scalht/common.hpp>

namespace scalht
{

/// Smallest power of two >= n (n >= 1).
inline Index next_pow2(Index n)
{
    Index p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

///
/// ### FftPlan
///
/// Twiddle factors and bit-reversal permutation for one power-of-two length.
/// A plan is immutable after construction and can be shared between threads.
///
template <typename Real>
class FftPlan
{
public:
    using Complex = std::complex<Real>;

    explicit FftPlan(Index size) : m_size(size), m_twiddle(), m_bitrev()
    {
        detail::require(size >= 1 && (size & (size - 1)) == 0,
                        "FFT size must be a power of two");
        const Index half = size / 2;
        m_twiddle.resize(static_cast<std::size_t>(std::max<Index>(half, 1)));
        const Real two_pi = Real(2) * Real(3.141592653589793238462643383279502884L);
        for (Index k = 0; k < half; ++k)
        {
            const Real angle = -two_pi * Real(k) / Real(size);
            m_twiddle[static_cast<std::size_t>(k)] =
                Complex(std::cos(angle), std::sin(angle));
        }
        m_bitrev.resize(static_cast<std::size_t>(size));
        Index bits = 0;
        while ((Index(1) << bits) < size)
            ++bits;
        for (Index i = 0; i < size; ++i)
        {
            Index rev = 0;
            for (Index b = 0; b < bits; ++b)
            {
                if (i & (Index(1) << b))
                    rev |= Index(1) << (bits - 1 - b);
            }
            m_bitrev[static_cast<std::size_t>(i)] = rev;
        }
    }

    Index size() const { return m_size; }

    /// In-place forward transform `X[k] = sum_j x[j] exp(-2 pi i jk / N)`.
    void forward(Complex* data) const { transform(data, false); }

    /// In-place inverse transform, including the 1/N factor.
    void inverse(Complex* data) const
    {
        transform(data, true);
        const Real scale = Real(1) / Real(m_size);
        for (Index i = 0; i < m_size; ++i)
            data[i] *= scale;
    }

private:
    void transform(Complex* data, bool conj_twiddle) const
    {
        for (Index i = 0; i < m_size; ++i)
        {
            const Index j = m_bitrev[static_cast<std::size_t>(i)];
            if (i < j)
                std::swap(data[i], data[j]);
        }
        for (Index len = 2; len <= m_size; len <<= 1)
        {
            const Index half   = len / 2;
            const Index stride = m_size / len;
            for (Index start = 0; start < m_size; start += len)
            {
                for (Index k = 0; k < half; ++k)
                {
                    Complex w = m_twiddle[static_cast<std::size_t>(k * stride)];
                    if (conj_twiddle)
                        w = std::conj(w);
                    const Complex u = data[start + k];
                    const Complex v = data[start + k + half] * w;
                    data[start + k]        = u + v;
                    data[start + k + half] = u - v;
                }
            }
        }
    }

    Index m_size;
    std::vector<Complex> m_twiddle;
    std::vector<Index> m_bitrev;
};

///
/// Linear convolution `c[t] = sum_u a[u] b[t - u]`, length `a.size() +
/// b.size() - 1`, through a zero-padded FFT.
///
template <typename Real>
std::vector<std::complex<Real>>
fft_convolve(const std::vector<std::complex<Real>>& a,
             const std::vector<std::complex<Real>>& b)
{
    using Complex = std::complex<Real>;
    detail::require(!a.empty() && !b.empty(), "fft_convolve: empty input");
    const Index len = static_cast<Index>(a.size() + b.size() - 1);
    const FftPlan<Real> plan(next_pow2(len));
    std::vector<Complex> fa(static_cast<std::size_t>(plan.size()), Complex(0));
    std::vector<Complex> fb(fa.size(), Complex(0));
    std::copy(a.begin(), a.end(), fa.begin());
    std::copy(b.begin(), b.end(), fb.begin());
    plan.forward(fa.data());
    plan.forward(fb.data());
    for (std::size_t i = 0; i < fa.size(); ++i)
        fa[i] *= fb[i];
    plan.inverse(fa.data());
    fa.resize(static_cast<std::size_t>(len));
    return fa;
}

} // namespace scalht

#endif /* SCALHT_FFT_HPP */
