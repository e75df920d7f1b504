///
/// \file tensor.hpp
///
/// Dense complex order-3 tensors and the small amount of multilinear algebra
/// the solver needs: matricization, mode products, Tucker assembly,
/// truncated SVD / HOSVD and Hermitian positive-definite solves.
///
/// Storage is column-major in (i1, i2, i3), i.e. the linear index of entry
/// (i1, i2, i3) is `i1 + n1 * (i2 + n2 * i3)`. With this layout the mode-1
/// matricization `M1(T)(i1, i2 + i3 * n2)` is the storage itself viewed as an
/// `n1 x (n2 * n3)` matrix.
///
#ifndef SCALHT_TENSOR_HPP
#define SCALHT_TENSOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <scalht/common.hpp>

namespace scalht
{

namespace detail
{

#ifdef SCALHT_ALLOC_PROBE
///
/// Test-only probe recording the largest tensor allocated on this thread while
/// armed. Used to check that the solver phase never materializes a lifted
/// n1 x n2 x s tensor.
///
struct AllocationProbe
{
    static Index& peak()
    {
        thread_local Index value = 0;
        return value;
    }
    static bool& armed()
    {
        thread_local bool value = false;
        return value;
    }
    static void record(Index count)
    {
        if (armed())
        {
            peak() = std::max(peak(), count);
        }
    }
};
#endif

inline void record_allocation([[maybe_unused]] Index count)
{
#ifdef SCALHT_ALLOC_PROBE
    AllocationProbe::record(count);
#endif
}

inline void check_mode(int mode)
{
    if (mode < 1 || mode > 3)
    {
        throw DimensionError("tensor mode must be 1, 2 or 3, got " +
                             std::to_string(mode));
    }
}

} // namespace detail

///
/// ### Tensor3
///
/// Dense order-3 array with dims (n1, n2, n3). A default-constructed tensor is
/// empty; every other constructor requires all three dims to be positive.
///
template <typename Scalar_>
class Tensor3
{
public:
    using Scalar     = Scalar_;
    using RealScalar = RealOf<Scalar>;
    using Dims       = std::array<Index, 3>;
    using Storage    = Vector<Scalar>;
    using MatrixType = Matrix<Scalar>;
    using MapType      = Eigen::Map<MatrixType>;
    using ConstMapType = Eigen::Map<const MatrixType>;

    Tensor3() : m_dims{0, 0, 0}, m_data() {}

    Tensor3(Index n1, Index n2, Index n3) : m_dims{n1, n2, n3}, m_data()
    {
        detail::require(n1 >= 1 && n2 >= 1 && n3 >= 1,
                        "tensor dims must be positive");
        m_data.resize(n1 * n2 * n3);
        detail::record_allocation(m_data.size());
    }

    explicit Tensor3(const Dims& dims) : Tensor3(dims[0], dims[1], dims[2]) {}

    static Tensor3 Zero(Index n1, Index n2, Index n3)
    {
        Tensor3 t(n1, n2, n3);
        t.m_data.setZero();
        return t;
    }

    static Tensor3 Zero(const Dims& d) { return Zero(d[0], d[1], d[2]); }

    static Tensor3 Constant(const Dims& d, const Scalar& value)
    {
        Tensor3 t(d);
        t.m_data.setConstant(value);
        return t;
    }

    /// Wrap an existing linear storage vector (size must match).
    static Tensor3 FromStorage(const Dims& d, Storage data)
    {
        detail::require(data.size() == d[0] * d[1] * d[2],
                        "storage size does not match tensor dims");
        Tensor3 t;
        t.m_dims = d;
        t.m_data = std::move(data);
        detail::record_allocation(t.m_data.size());
        return t;
    }

    const Dims& dims() const { return m_dims; }

    /// Size along `mode` (1-based, matching the notation M1/M2/M3).
    Index dim(int mode) const
    {
        detail::check_mode(mode);
        return m_dims[static_cast<std::size_t>(mode - 1)];
    }

    Index size() const { return m_data.size(); }
    bool empty() const { return m_data.size() == 0; }

    Scalar& operator()(Index i1, Index i2, Index i3)
    {
        return m_data[i1 + m_dims[0] * (i2 + m_dims[1] * i3)];
    }

    const Scalar& operator()(Index i1, Index i2, Index i3) const
    {
        return m_data[i1 + m_dims[0] * (i2 + m_dims[1] * i3)];
    }

    Storage& data() { return m_data; }
    const Storage& data() const { return m_data; }

    /// Mode-1 unfolding as a view (n1 x n2*n3).
    MapType unfold1()
    {
        return MapType(m_data.data(), m_dims[0], m_dims[1] * m_dims[2]);
    }

    ConstMapType unfold1() const
    {
        return ConstMapType(m_data.data(), m_dims[0], m_dims[1] * m_dims[2]);
    }

    /// View with modes 1 and 2 fused (n1*n2 x n3); its transpose is M3.
    ConstMapType fused12() const
    {
        return ConstMapType(m_data.data(), m_dims[0] * m_dims[1], m_dims[2]);
    }

    MapType fused12()
    {
        return MapType(m_data.data(), m_dims[0] * m_dims[1], m_dims[2]);
    }

    RealScalar norm() const { return m_data.norm(); }
    RealScalar squaredNorm() const { return m_data.squaredNorm(); }

    Tensor3 conjugate() const
    {
        return FromStorage(m_dims, m_data.conjugate());
    }

    void setZero() { m_data.setZero(); }

    Tensor3& operator+=(const Tensor3& other)
    {
        check_same(other);
        m_data += other.m_data;
        return *this;
    }

    Tensor3& operator-=(const Tensor3& other)
    {
        check_same(other);
        m_data -= other.m_data;
        return *this;
    }

    Tensor3& operator*=(const Scalar& a)
    {
        m_data *= a;
        return *this;
    }

    friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
    friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
    friend Tensor3 operator*(const Scalar& s, Tensor3 a) { return a *= s; }
    friend Tensor3 operator*(Tensor3 a, const Scalar& s) { return a *= s; }

private:
    void check_same(const Tensor3& other) const
    {
        detail::require(m_dims == other.m_dims, "tensor dims mismatch");
    }

    Dims m_dims;
    Storage m_data;
};

using Tensor3cd = Tensor3<cdouble>;

/// Inner product <A, B> = sum conj(A) * B.
template <typename Scalar>
Scalar inner(const Tensor3<Scalar>& a, const Tensor3<Scalar>& b)
{
    detail::require(a.dims() == b.dims(), "inner: tensor dims mismatch");
    return a.data().dot(b.data());
}

///
/// Mode-k matricization.
///
///  - mode 1: `M(i1, i2 + i3*n2)`
///  - mode 2: `M(i2, i1 + i3*n1)`
///  - mode 3: `M(i3, i1 + i2*n1)`
///
template <typename Scalar>
Matrix<Scalar> matricize(const Tensor3<Scalar>& t, int mode)
{
    detail::check_mode(mode);
    const auto [n1, n2, n3] = t.dims();
    switch (mode)
    {
    case 1:
        return t.unfold1();
    case 2:
    {
        Matrix<Scalar> out(n2, n1 * n3);
        for (Index i3 = 0; i3 < n3; ++i3)
        {
            Eigen::Map<const Matrix<Scalar>> slice(t.data().data() + i3 * n1 * n2,
                                                   n1, n2);
            out.middleCols(i3 * n1, n1) = slice.transpose();
        }
        return out;
    }
    default:
        return t.fused12().transpose();
    }
}

/// Exact inverse of `matricize` for the given target dims.
template <typename Derived>
Tensor3<typename Derived::Scalar>
dematricize(const Eigen::MatrixBase<Derived>& m, int mode,
            const typename Tensor3<typename Derived::Scalar>::Dims& dims)
{
    using Scalar = typename Derived::Scalar;
    detail::check_mode(mode);
    const auto [n1, n2, n3] = dims;
    Tensor3<Scalar> t(dims);
    switch (mode)
    {
    case 1:
        detail::require(m.rows() == n1 && m.cols() == n2 * n3,
                        "dematricize: mode-1 shape mismatch");
        t.unfold1() = m;
        break;
    case 2:
        detail::require(m.rows() == n2 && m.cols() == n1 * n3,
                        "dematricize: mode-2 shape mismatch");
        for (Index i3 = 0; i3 < n3; ++i3)
        {
            Eigen::Map<Matrix<Scalar>> slice(t.data().data() + i3 * n1 * n2, n1,
                                             n2);
            slice = m.middleCols(i3 * n1, n1).transpose();
        }
        break;
    default:
        detail::require(m.rows() == n3 && m.cols() == n1 * n2,
                        "dematricize: mode-3 shape mismatch");
        t.fused12() = m.transpose();
        break;
    }
    return t;
}

///
/// Mode-k product `T x_k M`, contracting the k-th index of T with the columns
/// of M: `(T x_1 M)(j, i2, i3) = sum_{i1} M(j, i1) T(i1, i2, i3)`.
///
template <typename Scalar, typename Derived>
Tensor3<Scalar> mode_product(const Tensor3<Scalar>& t,
                             const Eigen::MatrixBase<Derived>& m, int mode)
{
    detail::check_mode(mode);
    detail::require(m.cols() == t.dim(mode),
                    "mode_product: matrix columns must equal the tensor size "
                    "along the contracted mode");
    const auto [n1, n2, n3] = t.dims();
    const Index k = m.rows();
    switch (mode)
    {
    case 1:
    {
        Tensor3<Scalar> out(k, n2, n3);
        out.unfold1().noalias() = m * t.unfold1();
        return out;
    }
    case 2:
    {
        Tensor3<Scalar> out(n1, k, n3);
        const Matrix<Scalar> mt = m.transpose();
        for (Index i3 = 0; i3 < n3; ++i3)
        {
            Eigen::Map<const Matrix<Scalar>> in(t.data().data() + i3 * n1 * n2,
                                                n1, n2);
            Eigen::Map<Matrix<Scalar>> dst(out.data().data() + i3 * n1 * k, n1,
                                           k);
            dst.noalias() = in * mt;
        }
        return out;
    }
    default:
    {
        Tensor3<Scalar> out(n1, n2, k);
        out.fused12().noalias() = t.fused12() * m.transpose();
        return out;
    }
    }
}

/// `(A, B, C) . T = T x_1 A x_2 B x_3 C`.
template <typename Scalar, typename DA, typename DB, typename DC>
Tensor3<Scalar> multilinear(const Tensor3<Scalar>& t,
                            const Eigen::MatrixBase<DA>& a,
                            const Eigen::MatrixBase<DB>& b,
                            const Eigen::MatrixBase<DC>& c)
{
    return mode_product(mode_product(mode_product(t, a, 1), b, 2), c, 3);
}

///
/// ### TuckerFactors
///
/// Factor quadruple (L, R, V, S) representing `S x_1 L x_2 R x_3 V`.
///
template <typename Scalar>
struct TuckerFactors
{
    Matrix<Scalar> L; ///< n1 x r
    Matrix<Scalar> R; ///< n2 x r
    Matrix<Scalar> V; ///< s x r
    Tensor3<Scalar> S; ///< r x r x r

    Index rank() const { return L.cols(); }

    void check() const
    {
        detail::require(!S.empty(), "Tucker core is empty");
        detail::require(L.cols() == S.dim(1) && R.cols() == S.dim(2) &&
                            V.cols() == S.dim(3),
                        "Tucker factor columns do not match the core dims");
    }

    RealOf<Scalar> norm() const
    {
        using std::sqrt;
        return sqrt(L.squaredNorm() + R.squaredNorm() + V.squaredNorm() +
                    S.squaredNorm());
    }
};

/// `(L, R, V) . S`.
template <typename Scalar>
Tensor3<Scalar> assemble(const TuckerFactors<Scalar>& f)
{
    f.check();
    return multilinear(f.S, f.L, f.R, f.V);
}

///
/// Result of a rank-r truncated SVD. `W` is only filled when requested.
///
template <typename Scalar>
struct TruncatedSvd
{
    Matrix<Scalar> U;
    Vector<RealOf<Scalar>> sigma;
    Matrix<Scalar> W;
};

namespace detail
{

// Gram-based path for strongly rectangular, large inputs. Eigenvectors of a
// Hermitian matrix are orthonormal to working precision, so the orthonormality
// contract holds; the trailing singular values lose relative accuracy below
// sqrt(eps) * sigma_max, which is irrelevant for the dominant subspace.
template <typename Scalar, typename Derived>
TruncatedSvd<Scalar> gram_svd(const Eigen::MatrixBase<Derived>& m, Index r,
                              bool with_right)
{
    using Real = RealOf<Scalar>;
    TruncatedSvd<Scalar> out;
    const bool wide = m.rows() <= m.cols();
    const Index k = wide ? m.rows() : m.cols();
    Matrix<Scalar> gram = Matrix<Scalar>::Zero(k, k);
    if (wide)
    {
        gram.template selfadjointView<Eigen::Lower>().rankUpdate(m);
    }
    else
    {
        gram.template selfadjointView<Eigen::Lower>().rankUpdate(m.adjoint());
    }
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(gram);
    out.sigma.resize(r);
    Matrix<Scalar> top(k, r);
    for (Index j = 0; j < r; ++j)
    {
        const Index src = k - 1 - j;
        out.sigma[j] = std::sqrt(std::max(es.eigenvalues()[src], Real(0)));
        top.col(j) = es.eigenvectors().col(src);
    }
    if (wide)
    {
        out.U = std::move(top);
        if (with_right)
        {
            out.W = m.adjoint() * out.U;
            for (Index j = 0; j < r; ++j)
            {
                if (out.sigma[j] > Real(0))
                    out.W.col(j) /= out.sigma[j];
            }
        }
    }
    else
    {
        Matrix<Scalar> mu = m * top;
        Eigen::HouseholderQR<Matrix<Scalar>> qr(mu);
        Matrix<Scalar> q =
            qr.householderQ() * Matrix<Scalar>::Identity(m.rows(), r);
        // Restore the phase of each column so that U ~ M W / sigma.
        for (Index j = 0; j < r; ++j)
        {
            const Scalar d = q.col(j).dot(mu.col(j));
            if (std::abs(d) > Real(0))
                q.col(j) *= d / std::abs(d);
        }
        out.U = std::move(q);
        if (with_right)
            out.W = std::move(top);
    }
    return out;
}

} // namespace detail

///
/// Top-r singular triplets of `m`.
///
/// Small or nearly square inputs go through Eigen's divide-and-conquer SVD;
/// strongly rectangular inputs with more than 2^18 entries go through the
/// Hermitian Gram matrix of the short side, which is much cheaper for the
/// `n1 x (n2*s)` unfoldings used by the initialization.
///
/// \throw DimensionError  if `r` is not in [1, min(rows, cols)]
/// \throw NumericalError  if `m` has non-finite entries
///
template <typename Derived>
TruncatedSvd<typename Derived::Scalar>
top_r_svd(const Eigen::MatrixBase<Derived>& m, Index r, bool with_right = false)
{
    using Scalar = typename Derived::Scalar;
    detail::require(r >= 1 && r <= std::min(m.rows(), m.cols()),
                    "top_r_svd: rank must be in [1, min(rows, cols)]");
    if (!m.allFinite())
    {
        throw NumericalError("top_r_svd: input has non-finite entries");
    }
    const Index lo = std::min(m.rows(), m.cols());
    const Index hi = std::max(m.rows(), m.cols());
    if (hi >= 8 * lo && m.rows() * m.cols() >= (Index(1) << 18))
    {
        return detail::gram_svd<Scalar>(m, r, with_right);
    }
    const unsigned opts = with_right ? (Eigen::ComputeThinU | Eigen::ComputeThinV)
                                     : Eigen::ComputeThinU;
    Eigen::BDCSVD<Matrix<Scalar>> svd(m, opts);
    TruncatedSvd<Scalar> out;
    out.U     = svd.matrixU().leftCols(r);
    out.sigma = svd.singularValues().head(r);
    if (with_right)
        out.W = svd.matrixV().leftCols(r);
    return out;
}

///
/// Per-mode singular values of a tensor.
///
template <typename Scalar>
struct SpectrumTriple
{
    std::array<Vector<RealOf<Scalar>>, 3> sigma;
};

/// Leading `count` singular values of each matricization (count clipped to
/// the matricization's row count).
template <typename Scalar>
SpectrumTriple<Scalar> mode_spectra(const Tensor3<Scalar>& t, Index count)
{
    SpectrumTriple<Scalar> out;
    for (int mode = 1; mode <= 3; ++mode)
    {
        const Matrix<Scalar> m = matricize(t, mode);
        const Index k = std::min({count, m.rows(), m.cols()});
        out.sigma[static_cast<std::size_t>(mode - 1)] = top_r_svd(m, k).sigma;
    }
    return out;
}

/// Truncated HOSVD with multilinear rank (r, r, r).
template <typename Scalar>
TuckerFactors<Scalar> hosvd(const Tensor3<Scalar>& t, Index r)
{
    detail::require(r >= 1 && r <= std::min({t.dim(1), t.dim(2), t.dim(3)}),
                    "hosvd: rank exceeds a tensor dimension");
    TuckerFactors<Scalar> f;
    f.L = top_r_svd(matricize(t, 1), r).U;
    f.R = top_r_svd(matricize(t, 2), r).U;
    f.V = top_r_svd(matricize(t, 3), r).U;
    f.S = multilinear(t, f.L.adjoint(), f.R.adjoint(), f.V.adjoint());
    return f;
}

/// Largest condition number accepted by `solve_hpd`.
inline constexpr double kMaxGramCondition = 1e12;

///
/// Solve `G X = B` for Hermitian positive-definite `G` (r x r).
///
/// The condition number is computed from the eigenvalues of G; anything
/// above `kMaxGramCondition`, or a non-positive eigenvalue, is reported as a
/// `NumericalError` naming `label`. There is no silent regularization.
///
template <typename DG, typename DB>
Matrix<typename DG::Scalar> solve_hpd(const Eigen::MatrixBase<DG>& g,
                                      const Eigen::MatrixBase<DB>& b,
                                      const std::string& label = "Gram")
{
    using Scalar = typename DG::Scalar;
    using Real   = RealOf<Scalar>;
    detail::require(g.rows() == g.cols() && b.rows() == g.rows(),
                    "solve_hpd: shape mismatch");
    if (!g.allFinite() || !b.allFinite())
    {
        throw NumericalError(label + " Gram matrix has non-finite entries");
    }
    const Real scale = g.norm();
    detail::require((g - g.adjoint()).norm() <=
                        Real(1e-10) * std::max(scale, Real(1e-300)),
                    "solve_hpd: " + label + " Gram matrix is not Hermitian");

    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(g, Eigen::EigenvaluesOnly);
    const Real lmin = es.eigenvalues().minCoeff();
    const Real lmax = es.eigenvalues().maxCoeff();
    if (!(lmin > Real(0)) || lmax > Real(kMaxGramCondition) * lmin)
    {
        std::ostringstream os;
        os << label << " Gram matrix is ill-conditioned (eigenvalues in ["
           << lmin << ", " << lmax
           << "]); the rank is probably over-specified";
        throw NumericalError(os.str());
    }
    Eigen::LLT<Matrix<Scalar>> llt(g);
    return llt.solve(b);
}

/// `B G^{-1}` for Hermitian positive-definite G.
template <typename DG, typename DB>
Matrix<typename DG::Scalar> solve_hpd_right(const Eigen::MatrixBase<DG>& g,
                                            const Eigen::MatrixBase<DB>& b,
                                            const std::string& label = "Gram")
{
    return solve_hpd(g, b.adjoint(), label).adjoint();
}

} // namespace scalht

#endif /* SCALHT_TENSOR_HPP */
