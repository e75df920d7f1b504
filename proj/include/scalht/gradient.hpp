///
/// \file gradient.hpp
///
/// Loss and gradients of the penalized Hankel completion objective
///
///   `f(F) = (1/2p) <P_Omega(G*Z - Y), G*Z - Y> + 1/2 ||(I - GG*) Z||_F^2`,
///
/// where `Z = (L, R, V) . S` and `Y = D(X)` on the observed cells. With
/// duplicate samples the first term weighs each cell by its multiplicity, which
/// is the quantity whose gradient carries `P_Omega`.
///
/// Gradient convention: for a complex factor `A` and direction `dA`,
///
///   `d/dh f(A + h dA)|_{h=0} = Re <grad_A, dA>`,
///
/// i.e. `grad_A = 2 df/d(conj A)`. Descent direction is `-grad_A`.
///
#ifndef SCALHT_GRADIENT_HPP
#define SCALHT_GRADIENT_HPP

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <scalht/common.hpp>
#include <scalht/hankel.hpp>
#include <scalht/kernels.hpp>
#include <scalht/tensor.hpp>

namespace scalht
{

///
/// Gradients with respect to each of the four factors.
///
template <typename Scalar>
struct GradientBundle
{
    Matrix<Scalar> dL;
    Matrix<Scalar> dR;
    Matrix<Scalar> dV;
    Tensor3<Scalar> dS;

    RealOf<Scalar> norm() const
    {
        using std::sqrt;
        return sqrt(dL.squaredNorm() + dR.squaredNorm() + dV.squaredNorm() +
                    dS.squaredNorm());
    }
};

/// Sparse `s x n` residual supported on the observed cells.
template <typename Scalar>
using ResidualM = typename ObservationSet<Scalar>::SparseMatrix;

namespace detail
{

template <typename Scalar>
void check_obs(const ObservationSet<Scalar>& obs, const HankelSpace& space)
{
    require_config(!obs.empty(), "observation set is empty");
    require(obs.space() == space, "observation set belongs to another space");
}

// Fills M = p^{-1} P_Omega(Z - Y) and returns the data term
// (1/2p) sum_cells c |Z - Y|^2.
template <typename Scalar>
RealOf<Scalar> fill_residual(const FactorizedZ<Scalar>& fz,
                             const ObservationSet<Scalar>& obs, ResidualM<Scalar>& m)
{
    using Real = RealOf<Scalar>;
    const Real inv_p  = Real(1) / obs.p();
    const auto& cells = obs.cells();
    const auto& sw    = obs.space().sqrt_weights();
    m = obs.pattern();
    Scalar* v = m.valuePtr();
    Real data = 0;
    for (std::size_t i = 0; i < cells.size(); ++i)
    {
        const Index idx  = static_cast<Index>(i);
        const Cell& c    = cells[i];
        const Scalar y   = sw[c.a] * obs.cell_values()[idx];
        const Scalar d   = fz.at(c.k, c.a) - y;
        const Real count = obs.counts()[idx];
        data += count * std::norm(d);
        v[i] = (count * inv_p) * d;
    }
    return data * inv_p / Real(2);
}

} // namespace detail

/// `M = p^{-1} P_Omega(Z - Y)`, evaluating Z only on the observed cells.
template <typename Scalar>
ResidualM<Scalar> residual_M(const FactorizedZ<Scalar>& fz,
                             const ObservationSet<Scalar>& obs)
{
    detail::require_config(!obs.empty(), "observation set is empty");
    detail::require(fz.V.rows() == obs.space().s() && fz.B.rows() == obs.space().n(),
                    "residual_M: factored Z does not match the observation space");
    ResidualM<Scalar> m;
    detail::fill_residual(fz, obs, m);
    return m;
}

/// `E^ = V^H M - (V^H V) B^H` (r x n).
template <typename Scalar>
Matrix<Scalar> ehat(const Matrix<Scalar>& V, const ResidualM<Scalar>& m,
                    const Matrix<Scalar>& B)
{
    detail::require(V.rows() == m.rows() && B.rows() == m.cols() &&
                        V.cols() == B.cols(),
                    "ehat: shape mismatch");
    Matrix<Scalar> out = V.adjoint() * m;
    out.noalias() -= (V.adjoint() * V) * B.adjoint();
    return out;
}

///
/// Everything one solver iteration needs from a single pass over the data:
/// gradients, the Grams used by the scaled step, B (for reconstruction) and
/// the loss split into its two terms.
///
template <typename Scalar>
struct Evaluation
{
    GradientBundle<Scalar> grad;
    FactorGrams<Scalar> factor;
    ScaledGrams<Scalar> scaled;
    Matrix<Scalar> B;
    RealOf<Scalar> data_loss = 0;
    RealOf<Scalar> penalty   = 0;

    RealOf<Scalar> loss() const { return data_loss + penalty; }
};

///
/// Loss and gradients in O(n r^2 log n + n r^3 + s r^2 + m r) time.
///
///  - `dL = M1(G(E^) x_2 R^H) M1(S)^H + L GL`
///  - `dR = M2(G(E^) x_1 L^H) M2(S)^H + R GR`
///  - `dV = M B - V (B^H B) + V GV`
///  - `dS = conj(W) x_3 E^ + (L^H L, R^H R, V^H V) . S`
///
template <typename Scalar>
Evaluation<Scalar> evaluate(const TuckerFactors<Scalar>& f,
                            const ObservationSet<Scalar>& obs,
                            const HankelSpace& space)
{
    using Real = RealOf<Scalar>;
    detail::check_factors(f, space);
    detail::check_obs(obs, space);

    Evaluation<Scalar> ev;
    const Tensor3<Scalar> w = conv_tensor_W(f.L, f.R, space);
    ev.B      = matrix_B(w, f.S);
    ev.factor = factor_grams(f);
    ev.scaled = scaled_grams(f.S, ev.factor);

    ResidualM<Scalar> m;
    ev.data_loss = detail::fill_residual(FactorizedZ<Scalar>{f.V, ev.B}, obs, m);

    const Matrix<Scalar> bhb = ev.B.adjoint() * ev.B;
    Matrix<Scalar> eh        = f.V.adjoint() * m;
    eh.noalias() -= ev.factor.VV * ev.B.adjoint();

    const Tensor3<Scalar> g2 = single_mode_mul(eh, f.R, 2, space); // n1 x r x r
    const Tensor3<Scalar> g1 = single_mode_mul(eh, f.L, 1, space); // r x n2 x r

    auto& g = ev.grad;
    g.dL = g2.unfold1() * f.S.unfold1().adjoint();
    g.dL.noalias() += f.L * ev.scaled.GL;
    g.dR = matricize(g1, 2) * matricize(f.S, 2).adjoint();
    g.dR.noalias() += f.R * ev.scaled.GR;
    g.dV = m * ev.B;
    g.dV.noalias() -= f.V * bhb;
    g.dV.noalias() += f.V * ev.scaled.GV;

    const Tensor3<Scalar> s_all =
        multilinear(f.S, ev.factor.LL, ev.factor.RR, ev.factor.VV);
    g.dS = joint12_contract(w, eh);
    g.dS += s_all;

    // ||Z||^2 - ||G* Z||^2, both from r x r quantities.
    const Real z2  = std::real(inner(f.S, s_all));
    const Real gz2 = std::real((ev.factor.VV * bhb).trace());
    ev.penalty     = std::max(Real(0), (z2 - gz2) / Real(2));
    return ev;
}

template <typename Scalar>
GradientBundle<Scalar> grad_all(const TuckerFactors<Scalar>& f,
                                const ObservationSet<Scalar>& obs,
                                const HankelSpace& space)
{
    return evaluate(f, obs, space).grad;
}

///
/// Loss value from factored quantities only.
///
template <typename Scalar>
RealOf<Scalar> loss_value(const TuckerFactors<Scalar>& f,
                          const ObservationSet<Scalar>& obs,
                          const HankelSpace& space)
{
    using Real = RealOf<Scalar>;
    detail::check_factors(f, space);
    detail::check_obs(obs, space);
    const FactorizedZ<Scalar> fz = dehankel_factored(f, space);
    ResidualM<Scalar> m;
    const Real data = detail::fill_residual(fz, obs, m);
    const FactorGrams<Scalar> fg = factor_grams(f);
    const Tensor3<Scalar> s_all  = multilinear(f.S, fg.LL, fg.RR, fg.VV);
    const Real z2  = std::real(inner(f.S, s_all));
    const Real gz2 = std::real((fg.VV * (fz.B.adjoint() * fz.B)).trace());
    return data + std::max(Real(0), (z2 - gz2) / Real(2));
}

} // namespace scalht

#endif /* SCALHT_GRADIENT_HPP */
