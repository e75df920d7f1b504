// Shared helpers for the unit tests and the acceptance runner.
#ifndef SCALHT_TEST_SUPPORT_HPP
#define SCALHT_TEST_SUPPORT_HPP

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include <scalht/hankel.hpp>
#include <scalht/signal.hpp>
#include <scalht/tensor.hpp>

namespace scalht::testing
{

inline MatrixXcd random_matrix(Index rows, Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    MatrixXcd m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            m(i, j) = cdouble(g(rng), g(rng));
    return m;
}

inline Tensor3cd random_tensor(Index n1, Index n2, Index n3, std::mt19937_64& rng)
{
    return Tensor3cd::FromStorage({n1, n2, n3},
                                  random_matrix(n1 * n2 * n3, 1, rng).col(0));
}

inline MatrixXcd orthonormal(Index rows, Index cols, std::mt19937_64& rng)
{
    Eigen::HouseholderQR<MatrixXcd> qr(random_matrix(rows, cols, rng));
    return qr.householderQ() * MatrixXcd::Identity(rows, cols);
}

inline TuckerFactors<cdouble> random_factors(const HankelSpace& sp, Index r,
                                             std::mt19937_64& rng)
{
    return {random_matrix(sp.n1(), r, rng), random_matrix(sp.n2(), r, rng),
            random_matrix(sp.s(), r, rng), random_tensor(r, r, r, rng)};
}

/// Random observation set over a random signal (m samples with replacement,
/// so duplicates occur).
inline ObservationSet<cdouble> random_obs(const HankelSpace& sp, Index m,
                                          std::mt19937_64& rng,
                                          SamplingMode mode = SamplingMode::WithReplacement)
{
    const MatrixXcd x = random_matrix(sp.s(), sp.n(), rng);
    return ObservationSet<cdouble>(sp, sample_observations(sp, m, mode, rng()), x);
}

/// `||a - b|| / max(||b||, tiny)`.
template <typename A, typename B>
double rel_diff(const A& a, const B& b)
{
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

inline double rel_diff_t(const Tensor3cd& a, const Tensor3cd& b)
{
    return (a.data() - b.data()).norm() / std::max(b.norm(), 1e-300);
}

/// Sine of the largest principal angle between the column spans of two
/// matrices with orthonormal columns.
inline double subspace_distance(const MatrixXcd& u, const MatrixXcd& v)
{
    const MatrixXcd p = u - v * (v.adjoint() * u);
    return Eigen::JacobiSVD<MatrixXcd>(p).singularValues()(0);
}

/// Ground-truth factors of `G(D(X)) = H(X)` for an exact model, via HOSVD.
inline TuckerFactors<cdouble> truth_factors(const MatrixXcd& x, const HankelSpace& sp,
                                            Index r)
{
    return hosvd(lift_H(x, sp), r);
}

} // namespace scalht::testing

#endif
