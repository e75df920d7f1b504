///
/// \file init.hpp
///
/// Sequential spectral initialization and the scaled row projection.
///
/// From `Z0 = p^{-1} G(P_Omega(Y))`:
///
///  1. `L', R'` = top-r left singular vectors of `M1(Z0)`, `M2(Z0)`;
///  2. `V`      = top-r left singular vectors of `M3(Z0 x_1 L'^H)`;
///  3. `S`      = `(L'^H, R'^H, V^H) . Z0`;
///  4. `(L, R)` = row projection of `(L', R')`.
///
/// `V` is taken after contracting mode 1 rather than from `M3(Z0)` directly:
/// a single sample contributes a mode-3 unfolding of norm one but mode-1/2
/// unfoldings of norm `1 / sqrt(w_a)`, so `M3(Z0)` is dominated by sampling
/// noise.
///
#ifndef SCALHT_INIT_HPP
#define SCALHT_INIT_HPP

#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <scalht/common.hpp>
#include <scalht/hankel.hpp>
#include <scalht/kernels.hpp>
#include <scalht/tensor.hpp>

namespace scalht
{

enum class ProjectionMode
{
    Disabled,
    Radius, ///< fixed radius B
    Auto    ///< B = c_b * sqrt(r) * sigma_max(M1(Z0))
};

struct ProjectionConfig
{
    ProjectionMode mode = ProjectionMode::Disabled;
    double radius = 0.0;
    double c_b    = 8.0;
};

enum class InitRoute
{
    Auto,  ///< dense below `dense_cap`, lean above
    Dense, ///< materialize Z0
    Lean   ///< work from the sparse observations only
};

struct InitOptions
{
    InitRoute route = InitRoute::Auto;
    /// Largest lifted tensor (entries) the automatic route materializes.
    Index dense_cap = Index(1) << 22;
    ProjectionConfig projection;
};

///
/// `Z0 = p^{-1} G(P_Omega(Y))`, equivalently `H` applied to the matrix holding
/// `p^{-1} c X(k, a)` on each observed cell of multiplicity c.
///
template <typename Scalar>
Tensor3<Scalar> observed_lift(const ObservationSet<Scalar>& obs, const HankelSpace& space)
{
    detail::require_config(!obs.empty(), "observation set is empty");
    detail::require(obs.space() == space, "observation set belongs to another space");
    Matrix<Scalar> xo = Matrix<Scalar>::Zero(space.s(), space.n());
    const RealOf<Scalar> inv_p = RealOf<Scalar>(1) / obs.p();
    for (Index i = 0; i < obs.unique_count(); ++i)
    {
        const Cell& c = obs.cells()[static_cast<std::size_t>(i)];
        xo(c.k, c.a)  = inv_p * obs.counts()[i] * obs.cell_values()[i];
    }
    return lift_H(xo, space);
}

///
/// Scale row i of L' by `min{1, B / (sqrt(n) ||L'(i,:) L~'^H||)}` and likewise
/// for R'. Row norms use the Grams of the unprojected factors, so rows inside
/// the radius are returned unchanged. A non-positive or infinite radius
/// disables the projection.
///
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>>
scaled_project(const Matrix<Scalar>& lp, const Matrix<Scalar>& rp,
               const Matrix<Scalar>& v, const Tensor3<Scalar>& s, double radius,
               const HankelSpace& space)
{
    using Real = RealOf<Scalar>;
    std::pair<Matrix<Scalar>, Matrix<Scalar>> out{lp, rp};
    if (!(radius > 0.0) || !std::isfinite(radius))
        return out;
    TuckerFactors<Scalar> f{lp, rp, v, s};
    const ScaledGrams<Scalar> sg = scaled_grams(f);
    const Real bound = Real(radius) / std::sqrt(Real(space.n()));
    auto clip = [bound](Matrix<Scalar>& m, const Matrix<Scalar>& g) {
        for (Index i = 0; i < m.rows(); ++i)
        {
            const Real row2 = std::real(m.row(i).dot(m.row(i) * g));
            const Real row  = std::sqrt(std::max(row2, Real(0)));
            if (row > bound)
                m.row(i) *= bound / row;
        }
    };
    clip(out.first, sg.GL);
    clip(out.second, sg.GR);
    return out;
}

///
/// Spectral estimate with diagnostics.
///
template <typename Scalar>
struct InitResult
{
    TuckerFactors<Scalar> factors;
    /// Largest singular value of `M1(Z0)`.
    double sigma_max = 0.0;
    /// Radius actually applied (0 when projection is disabled).
    double radius = 0.0;
    bool dense_route = false;
};

namespace detail
{

// Hermitian eigen-decomposition, top-r eigenvectors in decreasing order.
template <typename Scalar>
std::pair<Matrix<Scalar>, RealOf<Scalar>> top_eigvecs(const Matrix<Scalar>& g, Index r)
{
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(g);
    if (es.info() != Eigen::Success)
        throw NumericalError("initialization: eigen-decomposition failed");
    const Index k = g.rows();
    Matrix<Scalar> u(k, r);
    for (Index j = 0; j < r; ++j)
        u.col(j) = es.eigenvectors().col(k - 1 - j);
    return {u, es.eigenvalues()[k - 1]};
}

// Gram of a Hankel-lifted unfolding: out(i, i') = sum_{j < win} C(i + j, i' + j)
// for i, i' < len, through a sliding window along each diagonal of C.
template <typename Scalar>
Matrix<Scalar> windowed_diagonal_gram(const Matrix<Scalar>& c, Index len, Index win)
{
    Matrix<Scalar> out(len, len);
    for (Index d = 0; d < len; ++d)
    {
        Scalar acc(0);
        for (Index j = 0; j < win; ++j)
            acc += c(j, j + d);
        out(0, d) = acc;
        for (Index i = 1; i + d < len; ++i)
        {
            acc += c(i + win - 1, i + win - 1 + d) - c(i - 1, i - 1 + d);
            out(i, i + d) = acc;
        }
    }
    for (Index j = 0; j < len; ++j)
        for (Index i = j + 1; i < len; ++i)
            out(i, j) = std::conj(out(j, i));
    return out;
}

} // namespace detail

///
/// Spectral initialization. `opts.route` picks between the dense path (forms
/// Z0) and the lean path, which builds the mode-1/2 Grams from
/// `C = Xo^T conj(Xo)` (n x n) and gets V and S through the FFT kernels.
///
template <typename Scalar>
InitResult<Scalar> spectral_init(const ObservationSet<Scalar>& obs,
                                 const HankelSpace& space, Index r,
                                 const InitOptions& opts = {})
{
    using Real = RealOf<Scalar>;
    detail::require_config(!obs.empty(), "observation set is empty");
    detail::require(obs.space() == space, "observation set belongs to another space");
    detail::require(r >= 1 && r <= std::min({space.n1(), space.n2(), space.s()}),
                    "initialization: rank must be in [1, min(n1, n2, s)]");

    InitResult<Scalar> res;
    res.dense_route = opts.route == InitRoute::Dense ||
                      (opts.route == InitRoute::Auto &&
                       space.lifted_size() <= opts.dense_cap);
    TuckerFactors<Scalar>& f = res.factors;
    Matrix<Scalar> lp, rp;

    if (res.dense_route)
    {
        const Tensor3<Scalar> z0 = observed_lift(obs, space);
        const auto svd1 = top_r_svd(z0.unfold1(), r);
        lp            = svd1.U;
        res.sigma_max = static_cast<double>(svd1.sigma[0]);
        rp            = top_r_svd(matricize(z0, 2), r).U;
        const Tensor3<Scalar> zl = mode_product(z0, lp.adjoint(), 1);
        f.V = top_r_svd(matricize(zl, 3), r).U;
        f.S = mode_product(mode_product(zl, rp.adjoint(), 2), f.V.adjoint(), 3);
    }
    else
    {
        // Xo holds p^{-1} c X on observed cells, so Z0 = H(Xo) = G(D(Xo)).
        typename ObservationSet<Scalar>::SparseMatrix xo = obs.pattern();
        typename ObservationSet<Scalar>::SparseMatrix e  = obs.pattern();
        const Real inv_p = Real(1) / obs.p();
        for (Index i = 0; i < obs.unique_count(); ++i)
        {
            const Cell& c = obs.cells()[static_cast<std::size_t>(i)];
            const Scalar x = inv_p * obs.counts()[i] * obs.cell_values()[i];
            xo.valuePtr()[i] = x;
            e.valuePtr()[i]  = space.sqrt_weights()[c.a] * x;
        }
        const Eigen::SparseMatrix<Scalar> xt = xo.transpose();
        const Eigen::SparseMatrix<Scalar> xc = xo.conjugate();
        const Eigen::SparseMatrix<Scalar> cs = xt * xc;
        const Matrix<Scalar> c = cs.toDense();

        const auto [l_top, lam1] =
            detail::top_eigvecs(detail::windowed_diagonal_gram(c, space.n1(), space.n2()), r);
        lp            = l_top;
        res.sigma_max = std::sqrt(std::max(static_cast<double>(lam1), 0.0));
        rp = detail::top_eigvecs(detail::windowed_diagonal_gram(c, space.n2(), space.n1()), r)
                 .first;

        const Matrix<Scalar> ed = e.toDense();
        const Tensor3<Scalar> zl = single_mode_mul(ed, lp, 1, space); // r x n2 x s
        f.V = top_r_svd(matricize(zl, 3), r).U;
        const Tensor3<Scalar> w = conv_tensor_W(lp, rp, space);
        f.S = joint12_contract(w, Matrix<Scalar>(f.V.adjoint() * e));
    }

    if (opts.projection.mode == ProjectionMode::Radius)
        res.radius = opts.projection.radius;
    else if (opts.projection.mode == ProjectionMode::Auto)
        res.radius = opts.projection.c_b * std::sqrt(double(r)) * res.sigma_max;

    auto [l, rr] = scaled_project(lp, rp, f.V, f.S, res.radius, space);
    f.L = std::move(l);
    f.R = std::move(rr);
    return res;
}

/// Factors of the spectral initialization with an explicit radius
/// (non-positive disables the projection).
template <typename Scalar>
TuckerFactors<Scalar> sequential_init(const ObservationSet<Scalar>& obs,
                                      const HankelSpace& space, Index r,
                                      double proj_radius = 0.0)
{
    InitOptions opts;
    if (proj_radius > 0.0)
    {
        opts.projection.mode   = ProjectionMode::Radius;
        opts.projection.radius = proj_radius;
    }
    return spectral_init(obs, space, r, opts).factors;
}

} // namespace scalht

#endif /* SCALHT_INIT_HPP */
