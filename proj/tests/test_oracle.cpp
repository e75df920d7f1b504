#include <cmath>

#include <gtest/gtest.h>

#include <scalht/oracle.hpp>
#include <scalht/signal.hpp>

#include "test_support.hpp"

using namespace scalht;
using scalht::testing::random_factors;
using scalht::testing::random_matrix;
using scalht::testing::random_obs;
using scalht::testing::rel_diff;
using scalht::testing::rel_diff_t;

namespace
{

double pairing(const GradientBundle<cdouble>& g, const TuckerFactors<cdouble>& d)
{
    return std::real(g.dL.cwiseProduct(d.L.conjugate()).sum() +
                     g.dR.cwiseProduct(d.R.conjugate()).sum() +
                     g.dV.cwiseProduct(d.V.conjugate()).sum() + inner(d.S, g.dS));
}

TuckerFactors<cdouble> axpy(const TuckerFactors<cdouble>& f, double h,
                            const TuckerFactors<cdouble>& d)
{
    return {f.L + h * d.L, f.R + h * d.R, f.V + h * d.V, f.S + cdouble(h) * d.S};
}

} // namespace

TEST(OracleGradients, FiniteDifferences)
{
    std::mt19937_64 rng(90);
    for (int trial = 0; trial < 10; ++trial)
    {
        const HankelSpace sp(3 + trial % 3, 2 + trial % 4, 2 + trial % 2);
        const Index r = 1 + trial % 2;
        const auto f   = random_factors(sp, r, rng);
        const auto d   = random_factors(sp, r, rng);
        const auto obs = random_obs(sp, 2 * sp.n(), rng);
        const double h  = 1e-5;
        const double fd = (oracle::oracle_loss(axpy(f, h, d), obs, sp) -
                           oracle::oracle_loss(axpy(f, -h, d), obs, sp)) /
                          (2 * h);
        const double an = pairing(oracle::oracle_gradients(f, obs, sp), d);
        EXPECT_LT(std::abs(fd - an), 1e-5 * std::abs(an));
    }
}

TEST(OracleGradients, GroundTruthIsZero)
{
    const MatrixXcd x = gen_signal(random_model(11, 4, 2, 3));
    const HankelSpace sp = make_space_for(11, 4);
    const auto f = scalht::testing::truth_factors(x, sp, 2);
    const ObservationSet<cdouble> obs(
        sp, sample_observations(sp, 20, SamplingMode::WithoutReplacement, 4), x);
    EXPECT_LT(oracle::oracle_gradients(f, obs, sp).norm(), 1e-10 * f.S.squaredNorm());
    EXPECT_LT(oracle::oracle_loss(f, obs, sp), 1e-20 * f.S.squaredNorm());
}

TEST(OracleGradients, ZeroCoreHandExpansion)
{
    // r = 1, dims (2, 2, 1), full sampling, S = 0: Z = 0, so E = -G(Y) and
    // every breve vanishes; only the core gradient survives.
    std::mt19937_64 rng(91);
    const HankelSpace sp(2, 2, 1);
    const MatrixXcd x = random_matrix(1, 3, rng);
    const ObservationSet<cdouble> obs(
        sp, sample_observations(sp, 3, SamplingMode::WithoutReplacement, 5), x);
    auto f = random_factors(sp, 1, rng);
    f.S.setZero();
    const auto g = oracle::oracle_gradients(f, obs, sp);
    EXPECT_EQ(g.dL.norm(), 0.0);
    EXPECT_EQ(g.dR.norm(), 0.0);
    EXPECT_EQ(g.dV.norm(), 0.0);
    // dS = -sum_{i,j} conj(l_i r_j v) X(0, i + j)
    cdouble expect = 0;
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j)
            expect -= std::conj(f.L(i, 0) * f.R(j, 0) * f.V(0, 0)) * x(0, i + j);
    EXPECT_LT(std::abs(g.dS(0, 0, 0) - expect), 1e-13 * std::abs(expect));
}

TEST(OracleBreveGrams, ClosedForms)
{
    std::mt19937_64 rng(92);
    const HankelSpace sp(4, 3, 3);
    auto f = random_factors(sp, 1, rng);
    const cdouble c = f.S(0, 0, 0);
    const auto sg = oracle::oracle_breve_grams(f);
    const double l2 = f.L.squaredNorm(), r2 = f.R.squaredNorm(), v2 = f.V.squaredNorm();
    EXPECT_NEAR(std::abs(sg.GL(0, 0) - std::norm(c) * v2 * r2), 0.0, 1e-12 * std::norm(c) * v2 * r2);
    EXPECT_NEAR(std::abs(sg.GR(0, 0) - std::norm(c) * v2 * l2), 0.0, 1e-12 * std::norm(c) * v2 * l2);
    EXPECT_NEAR(std::abs(sg.GV(0, 0) - std::norm(c) * r2 * l2), 0.0, 1e-12 * std::norm(c) * r2 * l2);

    // Orthonormal factors, diagonal core: every Gram is diag(sigma^2).
    const Index r = 3;
    TuckerFactors<cdouble> g{scalht::testing::orthonormal(5, r, rng),
                             scalht::testing::orthonormal(4, r, rng),
                             scalht::testing::orthonormal(3, r, rng),
                             Tensor3cd::Zero({r, r, r})};
    Eigen::VectorXd sig(r);
    sig << 3.0, 2.0, 0.5;
    for (Index k = 0; k < r; ++k)
        g.S(k, k, k) = sig[k];
    const auto sd = oracle::oracle_breve_grams(g);
    const MatrixXcd expect = sig.cwiseAbs2().cast<cdouble>().asDiagonal();
    EXPECT_LT(rel_diff(sd.GL, expect), 1e-12);
    EXPECT_LT(rel_diff(sd.GR, expect), 1e-12);
    EXPECT_LT(rel_diff(sd.GV, expect), 1e-12);
    EXPECT_LT(rel_diff(scaled_grams(g).GL, sd.GL), 1e-12);
}

TEST(OracleKernels, SelfConsistency)
{
    std::mt19937_64 rng(93);
    const HankelSpace sp(5, 4, 3);
    const MatrixXcd zl = MatrixXcd::Zero(5, 2), zr = MatrixXcd::Zero(4, 2);
    EXPECT_EQ(oracle::oracle_conv_W(zl, zr, sp).norm(), 0.0);

    // Delta factors: W has a single entry 1/sqrt(w) at a = i1 + i2.
    MatrixXcd dl = MatrixXcd::Zero(5, 1), dr = MatrixXcd::Zero(4, 1);
    dl(3, 0) = 1.0;
    dr(2, 0) = 1.0;
    const Tensor3cd w = oracle::oracle_conv_W(dl, dr, sp);
    for (Index a = 0; a < sp.n(); ++a)
        EXPECT_NEAR(std::abs(w(0, 0, a) - (a == 5 ? sp.inv_sqrt_weights()[5] : 0.0)), 0.0, 1e-15);

    // Linearity of the single-mode multiply.
    const MatrixXcd e1 = random_matrix(3, sp.n(), rng), e2 = random_matrix(3, sp.n(), rng);
    const MatrixXcd fm = random_matrix(5, 2, rng);
    const Tensor3cd lhs = oracle::oracle_single_mode_mul(MatrixXcd(e1 + 2.0 * e2), fm, 1, sp);
    const Tensor3cd rhs = oracle::oracle_single_mode_mul(e1, fm, 1, sp) +
                          oracle::oracle_single_mode_mul(e2, fm, 1, sp) * cdouble(2.0);
    EXPECT_LT(rel_diff_t(lhs, rhs), 1e-13);
}

TEST(Oracle, LossAgreesWithFastPath)
{
    std::mt19937_64 rng(94);
    const HankelSpace sp(7, 6, 4);
    for (int trial = 0; trial < 5; ++trial)
    {
        const auto f   = random_factors(sp, 3, rng);
        const auto obs = random_obs(sp, 20, rng);
        const double a = oracle::oracle_loss(f, obs, sp);
        EXPECT_NEAR(loss_value(f, obs, sp), a, 1e-10 * a);
    }
}

TEST(Oracle, RefusesLargeProblems)
{
    std::mt19937_64 rng(95);
    const HankelSpace sp(200, 200, 30);
    const auto f   = random_factors(sp, 1, rng);
    const auto obs = random_obs(sp, 10, rng);
    EXPECT_THROW(oracle::oracle_loss(f, obs, sp), DimensionError);
}
