///
/// \file signal.hpp
///
/// Synthetic spectrally sparse multi-channel signals
///
///   `X(l, j) = sum_k b_{k,l} p_k^j`,  `p_k = exp(i 2 pi f_k - tau_k)`,
///
/// additive noise, and diagnostics of the lifted tensor (condition number,
/// incoherence, numerical multilinear rank).
///
#ifndef SCALHT_SIGNAL_HPP
#define SCALHT_SIGNAL_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include <scalht/common.hpp>
#include <scalht/hankel.hpp>
#include <scalht/tensor.hpp>

namespace scalht
{

///
/// ### SpectralModel
///
/// `r` damped complex exponentials observed on `s` channels of length `n`.
/// Column k of `amplitudes` (s x r) is the amplitude vector `b_k`.
///
struct SpectralModel
{
    Index n = 0;
    Index s = 0;
    std::vector<double> freqs;
    std::vector<double> dampings;
    MatrixXcd amplitudes;

    Index r() const { return static_cast<Index>(freqs.size()); }

    void check() const
    {
        detail::require(n >= 1 && s >= 1, "signal model dims must be positive");
        detail::require(r() >= 1, "signal model needs at least one component");
        detail::require(dampings.size() == freqs.size(),
                        "one damping factor per frequency is required");
        detail::require(amplitudes.rows() == s && amplitudes.cols() == r(),
                        "amplitudes must be s x r");
    }

    /// `p_k = exp(i 2 pi f_k - tau_k)`.
    Eigen::VectorXcd poles() const
    {
        Eigen::VectorXcd p(r());
        for (Index k = 0; k < r(); ++k)
        {
            const auto ku = static_cast<std::size_t>(k);
            p[k] = std::exp(cdouble(-dampings[ku], 2.0 * std::numbers::pi * freqs[ku]));
        }
        return p;
    }
};

///
/// Random model: frequencies uniform on [0, 1) with no separation constraint,
/// a common damping factor, and amplitude vectors drawn from a standard
/// circular complex Gaussian and normalized to unit norm.
///
inline SpectralModel random_model(Index n, Index s, Index r, std::uint64_t seed,
                                  double damping = 0.0)
{
    detail::require(n >= 1 && s >= 1 && r >= 1, "random_model: dims must be positive");
    detail::require_config(damping >= 0.0, "damping must be nonnegative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    SpectralModel m;
    m.n = n;
    m.s = s;
    for (Index k = 0; k < r; ++k)
    {
        m.freqs.push_back(unif(rng));
        m.dampings.push_back(damping);
    }
    m.amplitudes.resize(s, r);
    for (Index k = 0; k < r; ++k)
    {
        for (Index l = 0; l < s; ++l)
            m.amplitudes(l, k) = cdouble(gauss(rng), gauss(rng));
        m.amplitudes.col(k).normalize();
    }
    return m;
}

/// `X = sum_k b_k a(p_k)^T` for arbitrary poles, `a(p) = [1, p, ..., p^{n-1}]`.
inline MatrixXcd signal_from_poles(const Eigen::VectorXcd& poles,
                                   const MatrixXcd& amplitudes, Index n)
{
    detail::require(amplitudes.cols() == poles.size(),
                    "one amplitude vector per pole is required");
    MatrixXcd a(poles.size(), n);
    for (Index k = 0; k < poles.size(); ++k)
    {
        // Powers through exp(j log p) keep the error flat in j.
        const cdouble lp = std::log(poles[k]);
        for (Index j = 0; j < n; ++j)
            a(k, j) = poles[k] == cdouble(0) ? cdouble(j == 0 ? 1.0 : 0.0)
                                             : std::exp(lp * double(j));
    }
    return amplitudes * a;
}

/// `s x n` signal of a model.
inline MatrixXcd gen_signal(const SpectralModel& m)
{
    m.check();
    return signal_from_poles(m.poles(), m.amplitudes, m.n);
}

/// `X + E` with i.i.d. circular complex Gaussian E, `E|e|^2 = sigma^2`.
inline MatrixXcd add_noise(const MatrixXcd& x, double sigma, std::uint64_t seed)
{
    detail::require_config(sigma >= 0.0, "noise level must be nonnegative");
    if (sigma == 0.0)
        return x;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma / std::sqrt(2.0));
    MatrixXcd out = x;
    for (Index j = 0; j < out.cols(); ++j)
        for (Index i = 0; i < out.rows(); ++i)
            out(i, j) += cdouble(gauss(rng), gauss(rng));
    return out;
}

/// Per-entry noise level giving `10 log10(||X||^2 / (s n sigma^2)) = snr_db`.
inline double sigma_for_snr(const MatrixXcd& x, double snr_db)
{
    const double per_entry = x.squaredNorm() / static_cast<double>(x.size());
    return std::sqrt(per_entry / std::pow(10.0, snr_db / 10.0));
}

///
/// Diagnostics of the lifted tensor `H(X)`.
///
struct ModelDiagnostics
{
    /// max over modes of sigma_1 / min over modes of sigma_r.
    double kappa = 0.0;
    /// Smallest mu0 with `||L||_{2,inf}^2, ||R||_{2,inf}^2 <= mu0 c_s r / n`.
    double mu0 = 0.0;
    double c_s = 0.0;
    std::array<Index, 3> ranks{0, 0, 0};
    SpectrumTriple<cdouble> spectra;
};

/// Numerical rank: number of singular values above `tol * sigma_max`.
inline Index numerical_rank(const Eigen::VectorXd& sigma, double tol)
{
    if (sigma.size() == 0 || sigma[0] <= 0.0)
        return 0;
    Index count = 0;
    for (Index i = 0; i < sigma.size(); ++i)
        count += sigma[i] > tol * sigma[0] ? 1 : 0;
    return count;
}

///
/// \throw DimensionError  if the lifted tensor exceeds `dense_cap` entries
///
inline ModelDiagnostics diagnostics(const MatrixXcd& x, const HankelSpace& space, Index r,
                                    double rank_tol = 1e-9,
                                    Index dense_cap = Index(1) << 22)
{
    detail::require(space.lifted_size() <= dense_cap,
                    "diagnostics: lifted tensor exceeds the dense cap");
    detail::require(r >= 1 && r <= std::min({space.n1(), space.n2(), space.s()}),
                    "diagnostics: rank must be in [1, min(n1, n2, s)]");
    const Tensor3cd z = lift_H(x, space);
    ModelDiagnostics d;
    d.c_s = space.c_s();
    d.spectra = mode_spectra(z, r + 1);
    double top = 0.0;
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t mode = 0; mode < 3; ++mode)
    {
        const Eigen::VectorXd& sv = d.spectra.sigma[mode];
        d.ranks[mode] = numerical_rank(sv, rank_tol);
        top = std::max(top, sv[0]);
        low = std::min(low, sv[r - 1]);
    }
    d.kappa = low > 0.0 ? top / low : std::numeric_limits<double>::infinity();

    const MatrixXcd l  = top_r_svd(matricize(z, 1), r).U;
    const MatrixXcd rr = top_r_svd(matricize(z, 2), r).U;
    const double row2  = std::max(l.rowwise().squaredNorm().maxCoeff(),
                                  rr.rowwise().squaredNorm().maxCoeff());
    d.mu0 = row2 * static_cast<double>(space.n()) / (d.c_s * static_cast<double>(r));
    return d;
}

} // namespace scalht

#endif /* SCALHT_SIGNAL_HPP */
