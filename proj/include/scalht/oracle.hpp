///
/// \file oracle.hpp
///
/// Brute-force reference implementations. Every routine here forms dense
/// lifted tensors and explicit Kronecker products; they exist to check the
/// structured kernels and are limited to small problems.
///
#ifndef SCALHT_ORACLE_HPP
#define SCALHT_ORACLE_HPP

#include <Eigen/Dense>

#include <scalht/common.hpp>
#include <scalht/gradient.hpp>
#include <scalht/hankel.hpp>
#include <scalht/kernels.hpp>
#include <scalht/tensor.hpp>

namespace scalht::oracle
{

/// Largest lifted tensor (entries) the oracle accepts.
inline constexpr Index kDenseCap = 1000000;

namespace detail
{

inline void check_cap(Index entries)
{
    if (entries > kDenseCap)
    {
        throw DimensionError("oracle: problem exceeds the dense cap of " +
                             std::to_string(kDenseCap) + " entries");
    }
}

} // namespace detail

/// Kronecker product `A (x) B`.
template <typename Scalar>
Matrix<Scalar> kron(const Matrix<Scalar>& a, const Matrix<Scalar>& b)
{
    Matrix<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Triple-loop mode product.
template <typename Scalar>
Tensor3<Scalar> mode_product_loops(const Tensor3<Scalar>& t, const Matrix<Scalar>& m,
                                   int mode)
{
    auto d = t.dims();
    d[static_cast<std::size_t>(mode - 1)] = m.rows();
    Tensor3<Scalar> out = Tensor3<Scalar>::Zero(d);
    for (Index i3 = 0; i3 < t.dim(3); ++i3)
        for (Index i2 = 0; i2 < t.dim(2); ++i2)
            for (Index i1 = 0; i1 < t.dim(1); ++i1)
                for (Index j = 0; j < m.rows(); ++j)
                {
                    if (mode == 1)
                        out(j, i2, i3) += m(j, i1) * t(i1, i2, i3);
                    else if (mode == 2)
                        out(i1, j, i3) += m(j, i2) * t(i1, i2, i3);
                    else
                        out(i1, i2, j) += m(j, i3) * t(i1, i2, i3);
                }
    return out;
}

/// Direct `O(n1 n2 r^2)` evaluation of the convolution tensor W.
template <typename Scalar>
Tensor3<Scalar> oracle_conv_W(const Matrix<Scalar>& L, const Matrix<Scalar>& R,
                              const HankelSpace& space)
{
    const Index r = L.cols();
    Tensor3<Scalar> w = Tensor3<Scalar>::Zero(r, r, space.n());
    for (Index j2 = 0; j2 < r; ++j2)
        for (Index j1 = 0; j1 < r; ++j1)
            for (Index i2 = 0; i2 < space.n2(); ++i2)
                for (Index i1 = 0; i1 < space.n1(); ++i1)
                    w(j1, j2, i1 + i2) += L(i1, j1) * R(i2, j2) *
                                          space.inv_sqrt_weights()[i1 + i2];
    return w;
}

/// `G(E) x_k F^H` through the dense lift.
template <typename Scalar>
Tensor3<Scalar> oracle_single_mode_mul(const Matrix<Scalar>& e,
                                       const Matrix<Scalar>& f, int mode,
                                       const HankelSpace& space)
{
    const HankelSpace sub(space.n1(), space.n2(), e.rows());
    detail::check_cap(sub.lifted_size());
    return mode_product_loops(lift_G(e, sub), Matrix<Scalar>(f.adjoint()), mode);
}

/// Materialized breve matrices.
template <typename Scalar>
struct Breves
{
    Matrix<Scalar> L; ///< (conj V (x) conj R) M1(S)^H
    Matrix<Scalar> R; ///< (conj V (x) conj L) M2(S)^H
    Matrix<Scalar> V; ///< (conj R (x) conj L) M3(S)^H
};

template <typename Scalar>
Breves<Scalar> oracle_breves(const TuckerFactors<Scalar>& f)
{
    detail::check_cap(f.L.rows() * f.R.rows() * f.V.rows());
    const Matrix<Scalar> cl = f.L.conjugate();
    const Matrix<Scalar> cr = f.R.conjugate();
    const Matrix<Scalar> cv = f.V.conjugate();
    Breves<Scalar> b;
    b.L = kron(cv, cr) * matricize(f.S, 1).adjoint();
    b.R = kron(cv, cl) * matricize(f.S, 2).adjoint();
    b.V = kron(cr, cl) * matricize(f.S, 3).adjoint();
    return b;
}

template <typename Scalar>
ScaledGrams<Scalar> oracle_breve_grams(const TuckerFactors<Scalar>& f)
{
    const Breves<Scalar> b = oracle_breves(f);
    return {b.L.adjoint() * b.L, b.R.adjoint() * b.R, b.V.adjoint() * b.V};
}

/// Dense `p^{-1} P_Omega(A)` with multiplicities.
template <typename Scalar>
Matrix<Scalar> dense_projection(const Matrix<Scalar>& a,
                                const ObservationSet<Scalar>& obs)
{
    Matrix<Scalar> out = Matrix<Scalar>::Zero(a.rows(), a.cols());
    for (const Cell& c : obs.samples())
        out(c.k, c.a) += a(c.k, c.a);
    return out / obs.p();
}

/// Dense weighted observation matrix `Y` (zero off the sampled cells).
template <typename Scalar>
Matrix<Scalar> dense_Y(const ObservationSet<Scalar>& obs)
{
    const HankelSpace& sp = obs.space();
    Matrix<Scalar> y = Matrix<Scalar>::Zero(sp.s(), sp.n());
    for (Index i = 0; i < obs.m(); ++i)
    {
        const Cell& c = obs.samples()[static_cast<std::size_t>(i)];
        y(c.k, c.a)   = sp.sqrt_weights()[c.a] * obs.values()[i];
    }
    return y;
}

/// Dense loss `(1/2p) <P_Omega(G*Z - Y), G*Z - Y> + 1/2 ||Z - G G* Z||^2`.
template <typename Scalar>
RealOf<Scalar> oracle_loss(const TuckerFactors<Scalar>& f,
                           const ObservationSet<Scalar>& obs,
                           const HankelSpace& space)
{
    detail::check_cap(space.lifted_size());
    const Tensor3<Scalar> z = assemble(f);
    const Matrix<Scalar> gz = adjoint_G(z, space);
    const Matrix<Scalar> d  = gz - dense_Y(obs);
    const Matrix<Scalar> pd = dense_projection(d, obs);
    const RealOf<Scalar> data = std::real(d.cwiseProduct(pd.conjugate()).sum()) / 2;
    const Tensor3<Scalar> perp = z - lift_G(gz, space);
    return data + perp.squaredNorm() / 2;
}

/// Dense gradients: contract `E = p^{-1} G P_Omega(G*Z - Y) + (I - GG*) Z`
/// with the materialized breve matrices.
template <typename Scalar>
GradientBundle<Scalar> oracle_gradients(const TuckerFactors<Scalar>& f,
                                        const ObservationSet<Scalar>& obs,
                                        const HankelSpace& space)
{
    detail::check_cap(space.lifted_size());
    const Tensor3<Scalar> z = assemble(f);
    const Matrix<Scalar> gz = adjoint_G(z, space);
    const Matrix<Scalar> pd = dense_projection(Matrix<Scalar>(gz - dense_Y(obs)), obs);
    const Tensor3<Scalar> e = lift_G(pd, space) + (z - lift_G(gz, space));
    const Breves<Scalar> b  = oracle_breves(f);
    GradientBundle<Scalar> g;
    g.dL = matricize(e, 1) * b.L;
    g.dR = matricize(e, 2) * b.R;
    g.dV = matricize(e, 3) * b.V;
    g.dS = multilinear(e, f.L.adjoint(), f.R.adjoint(), f.V.adjoint());
    return g;
}

/// Scaled step with materialized breves and explicit inverses.
template <typename Scalar>
TuckerFactors<Scalar> oracle_scaled_step(const TuckerFactors<Scalar>& f,
                                         const GradientBundle<Scalar>& g,
                                         RealOf<Scalar> eta)
{
    const ScaledGrams<Scalar> sg = oracle_breve_grams(f);
    TuckerFactors<Scalar> out;
    out.L = f.L - eta * g.dL * sg.GL.inverse();
    out.R = f.R - eta * g.dR * sg.GR.inverse();
    out.V = f.V - eta * g.dV * sg.GV.inverse();
    const Matrix<Scalar> il = (f.L.adjoint() * f.L).inverse();
    const Matrix<Scalar> ir = (f.R.adjoint() * f.R).inverse();
    const Matrix<Scalar> iv = (f.V.adjoint() * f.V).inverse();
    out.S = f.S - eta * multilinear(g.dS, il, ir, iv);
    return out;
}

} // namespace scalht::oracle

#endif /* SCALHT_ORACLE_HPP */
