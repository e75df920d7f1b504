///
/// \file kernels.hpp
///
/// Structured kernels for Tucker-factored Hankel tensors. None of them forms
/// an `n1 x n2 x s` tensor; the Hankel structure is handled through r^2 FFT
/// convolutions of length `n = n1 + n2 - 1`.
///
/// For factors `(L, R, V, S)` the central object is
///
///   `W(j1, j2, a) = (1 / sqrt(w_a)) [L(:, j1) * R(:, j2)](a)`,
///
/// a r x r x n tensor, and `B = M3(conj(W)) M3(S)^H` (n x r). With these,
/// `G*((L, R, V) . S) = V B^H`.
///
#ifndef SCALHT_KERNELS_HPP
#define SCALHT_KERNELS_HPP

#include <complex>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <scalht/common.hpp>
#include <scalht/fft.hpp>
#include <scalht/hankel.hpp>
#include <scalht/tensor.hpp>

namespace scalht
{

namespace detail
{

// FFT of each column of `cols`, zero padded (or reversed and conjugated when
// `reverse_conj` is set) to the plan length.
template <typename Scalar, typename Derived>
Matrix<Scalar> fft_columns(const Eigen::MatrixBase<Derived>& cols,
                           const FftPlan<RealOf<Scalar>>& plan,
                           bool reverse_conj = false)
{
    const Index len = cols.rows();
    Matrix<Scalar> out = Matrix<Scalar>::Zero(plan.size(), cols.cols());
    for (Index j = 0; j < cols.cols(); ++j)
    {
        if (reverse_conj)
        {
            for (Index i = 0; i < len; ++i)
                out(i, j) = std::conj(cols(len - 1 - i, j));
        }
        else
        {
            out.col(j).head(len) = cols.col(j);
        }
        plan.forward(out.col(j).data());
    }
    return out;
}

} // namespace detail

///
/// Convolution tensor `W` (r x r x n) of the columns of L (n1 x r) and
/// R (n2 x r), normalized by `1 / sqrt(w_a)`.
///
template <typename DL, typename DR>
Tensor3<typename DL::Scalar> conv_tensor_W(const Eigen::MatrixBase<DL>& L,
                                           const Eigen::MatrixBase<DR>& R,
                                           const HankelSpace& space)
{
    using Scalar = typename DL::Scalar;
    detail::require(L.rows() == space.n1() && R.rows() == space.n2(),
                    "conv_tensor_W: factor rows must be n1 and n2");
    detail::require(L.cols() >= 1 && L.cols() == R.cols(),
                    "conv_tensor_W: L and R must have the same rank");
    const Index r = L.cols();
    const Index n = space.n();
    const FftPlan<RealOf<Scalar>> plan(next_pow2(n));
    const Matrix<Scalar> fl = detail::fft_columns<Scalar>(L, plan);
    const Matrix<Scalar> fr = detail::fft_columns<Scalar>(R, plan);
    const auto& inv_sw = space.inv_sqrt_weights();

    Tensor3<Scalar> w(r, r, n);
    Vector<Scalar> buf(plan.size());
    for (Index j2 = 0; j2 < r; ++j2)
    {
        for (Index j1 = 0; j1 < r; ++j1)
        {
            buf = fl.col(j1).cwiseProduct(fr.col(j2));
            plan.inverse(buf.data());
            for (Index a = 0; a < n; ++a)
                w(j1, j2, a) = buf[a] * inv_sw[a];
        }
    }
    return w;
}

/// `B = M3(conj(W)) M3(S)^H`, an n x r matrix.
template <typename Scalar>
Matrix<Scalar> matrix_B(const Tensor3<Scalar>& w, const Tensor3<Scalar>& s)
{
    detail::require(w.dim(1) == s.dim(1) && w.dim(2) == s.dim(2),
                    "matrix_B: W and S ranks differ");
    return w.fused12().adjoint() * s.fused12().conjugate();
}

///
/// Factored form `Z = V B^H` of `G*((L, R, V) . S)` (s x n).
///
template <typename Scalar>
struct FactorizedZ
{
    Matrix<Scalar> V;
    Matrix<Scalar> B;

    /// Dense `V B^H`.
    Matrix<Scalar> dense() const { return V * B.adjoint(); }

    /// Entry `Z(k, a)`.
    Scalar at(Index k, Index a) const { return B.row(a).dot(V.row(k)); }
};

namespace detail
{

template <typename Scalar>
void check_factors(const TuckerFactors<Scalar>& f, const HankelSpace& space)
{
    f.check();
    require(f.L.rows() == space.n1() && f.R.rows() == space.n2() &&
                f.V.rows() == space.s(),
            "factor rows do not match the Hankel space");
}

} // namespace detail

/// `G*((L, R, V) . S)` in factored form, without forming the lifted tensor.
template <typename Scalar>
FactorizedZ<Scalar> dehankel_factored(const TuckerFactors<Scalar>& f,
                                      const HankelSpace& space)
{
    detail::check_factors(f, space);
    const Tensor3<Scalar> w = conv_tensor_W(f.L, f.R, space);
    return {f.V, matrix_B(w, f.S)};
}

///
/// `V^H E` for an `s x n` dense or sparse E. Lifting the result gives
/// `G(E) x_3 V^H = G(V^H E)`; the lift itself is left to the caller.
///
template <typename DV, typename DE>
Matrix<typename DV::Scalar> mode3_lift_mul(const DE& e,
                                           const Eigen::MatrixBase<DV>& vh)
{
    detail::require(vh.cols() == e.rows(),
                    "mode3_lift_mul: V^H columns must equal the rows of E");
    return vh * e;
}

///
/// `conj(W) x_3 E` (r x r x k) for a `k x n` dense or sparse E. Equal to
/// `G(E) x_1 L^H x_2 R^H` when W is built from (L, R).
///
template <typename Scalar, typename DE>
Tensor3<Scalar> joint12_contract(const Tensor3<Scalar>& w, const DE& e)
{
    detail::require(e.cols() == w.dim(3),
                    "joint12_contract: E must have n columns");
    Tensor3<Scalar> out(w.dim(1), w.dim(2), e.rows());
    out.fused12().noalias() = w.fused12().conjugate() * e.transpose();
    return out;
}

///
/// `G(E) x_1 F^H` (mode 1, dims (rF, n2, k)) or `G(E) x_2 F^H` (mode 2, dims
/// (n1, rF, k)) for a `k x n` matrix E, through FFT correlations of the rows
/// of `E D^{-1}` with the conjugated factor columns.
///
/// For mode 1, with `E~ = E D^{-1}`,
///
///   `out(j1, i2, i3) = sum_{i1} conj(F(i1, j1)) E~(i3, i1 + i2)`
///                   `= [E~(i3, :) * rev(conj(F(:, j1)))](n1 - 1 + i2)`.
///
template <typename DE, typename DF>
Tensor3<typename DE::Scalar> single_mode_mul(const Eigen::MatrixBase<DE>& e,
                                             const Eigen::MatrixBase<DF>& f,
                                             int mode, const HankelSpace& space)
{
    using Scalar = typename DE::Scalar;
    detail::require(mode == 1 || mode == 2, "single_mode_mul: mode must be 1 or 2");
    detail::require(e.cols() == space.n(), "single_mode_mul: E must have n columns");
    const Index len_f = mode == 1 ? space.n1() : space.n2();
    const Index len_o = mode == 1 ? space.n2() : space.n1();
    detail::require(f.rows() == len_f,
                    "single_mode_mul: factor rows must match the contracted mode");
    const Index k  = e.rows();
    const Index rf = f.cols();
    detail::require(k >= 1 && rf >= 1, "single_mode_mul: empty operand");

    // Only outputs t in [len_f - 1, n - 1] are read. A circular convolution of
    // length N >= n aliases index t with t + N >= n + len_f - 1, which is
    // past the linear support, so N = next_pow2(n) is exact.
    const FftPlan<RealOf<Scalar>> plan(next_pow2(space.n()));
    const Matrix<Scalar> et =
        (e * space.inv_sqrt_weights().cast<Scalar>().asDiagonal()).transpose();
    const Matrix<Scalar> fe = detail::fft_columns<Scalar>(et, plan);
    const Matrix<Scalar> ff = detail::fft_columns<Scalar>(f, plan, true);

    Tensor3<Scalar> out = mode == 1 ? Tensor3<Scalar>(rf, len_o, k)
                                    : Tensor3<Scalar>(len_o, rf, k);
    Vector<Scalar> buf(plan.size());
    for (Index i3 = 0; i3 < k; ++i3)
    {
        for (Index j = 0; j < rf; ++j)
        {
            buf = fe.col(i3).cwiseProduct(ff.col(j));
            plan.inverse(buf.data());
            for (Index i = 0; i < len_o; ++i)
            {
                if (mode == 1)
                    out(j, i, i3) = buf[len_f - 1 + i];
                else
                    out(i, j, i3) = buf[len_f - 1 + i];
            }
        }
    }
    return out;
}

///
/// Factor Grams `L^H L`, `R^H R`, `V^H V`.
///
template <typename Scalar>
struct FactorGrams
{
    Matrix<Scalar> LL;
    Matrix<Scalar> RR;
    Matrix<Scalar> VV;
};

template <typename Scalar>
FactorGrams<Scalar> factor_grams(const TuckerFactors<Scalar>& f)
{
    f.check();
    return {f.L.adjoint() * f.L, f.R.adjoint() * f.R, f.V.adjoint() * f.V};
}

///
/// Grams of the breve matrices: `GL = L~^H L~` with
/// `L~ = (conj(V) (x) conj(R)) M1(S)^H`, and likewise for R and V.
///
template <typename Scalar>
struct ScaledGrams
{
    Matrix<Scalar> GL;
    Matrix<Scalar> GR;
    Matrix<Scalar> GV;
};

namespace detail
{

template <typename Scalar>
Matrix<Scalar> hermitian_part(const Matrix<Scalar>& g)
{
    return (g + g.adjoint()) * RealOf<Scalar>(0.5);
}

} // namespace detail

///
/// Scaled Grams from the core and factor Grams only, in O(r^4):
///
///  - `GL = M1((I, R^H R, V^H V) . S) M1(S)^H`
///  - `GR = M2((L^H L, I, V^H V) . S) M2(S)^H`
///  - `GV = M3((L^H L, R^H R, I) . S) M3(S)^H`
///
template <typename Scalar>
ScaledGrams<Scalar> scaled_grams(const Tensor3<Scalar>& s,
                                 const FactorGrams<Scalar>& g)
{
    const Tensor3<Scalar> s_l = mode_product(s, g.LL, 1);
    const Tensor3<Scalar> s_lr = mode_product(s_l, g.RR, 2);
    const Tensor3<Scalar> s_rv = mode_product(mode_product(s, g.RR, 2), g.VV, 3);
    const Tensor3<Scalar> s_lv = mode_product(s_l, g.VV, 3);
    ScaledGrams<Scalar> out;
    out.GL = detail::hermitian_part<Scalar>(s_rv.unfold1() * s.unfold1().adjoint());
    out.GR = detail::hermitian_part<Scalar>(matricize(s_lv, 2) *
                                            matricize(s, 2).adjoint());
    out.GV = detail::hermitian_part<Scalar>(s_lr.fused12().transpose() *
                                            s.fused12().conjugate());
    return out;
}

template <typename Scalar>
ScaledGrams<Scalar> scaled_grams(const TuckerFactors<Scalar>& f)
{
    return scaled_grams(f.S, factor_grams(f));
}

} // namespace scalht

#endif /* SCALHT_KERNELS_HPP */
