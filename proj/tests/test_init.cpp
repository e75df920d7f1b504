#include <cmath>

#include <gtest/gtest.h>

#include <scalht/init.hpp>
#include <scalht/signal.hpp>
#include <scalht/solver.hpp>

#include "test_support.hpp"

using namespace scalht;
using scalht::testing::random_matrix;
using scalht::testing::random_obs;
using scalht::testing::rel_diff;
using scalht::testing::rel_diff_t;
using scalht::testing::subspace_distance;

namespace
{

ObservationSet<cdouble> full_obs(const HankelSpace& sp, const MatrixXcd& x)
{
    return ObservationSet<cdouble>(
        sp, sample_observations(sp, sp.s() * sp.n(), SamplingMode::WithoutReplacement, 1), x);
}

double orthonormality_error(const MatrixXcd& u)
{
    return (u.adjoint() * u - MatrixXcd::Identity(u.cols(), u.cols())).norm();
}

} // namespace

TEST(ObservedLift, FullSamplingIsTheLift)
{
    std::mt19937_64 rng(60);
    const HankelSpace sp(5, 4, 3);
    const MatrixXcd x = random_matrix(3, sp.n(), rng);
    EXPECT_LT(rel_diff_t(observed_lift(full_obs(sp, x), sp), lift_H(x, sp)), 1e-14);
}

TEST(ObservedLift, HalfSamplingDoubles)
{
    std::mt19937_64 rng(61);
    const HankelSpace sp(6, 5, 4);
    const MatrixXcd x = random_matrix(4, sp.n(), rng);
    const Index m = 4 * sp.n() / 2;
    const ObservationSet<cdouble> obs(
        sp, sample_observations(sp, m, SamplingMode::WithoutReplacement, 2), x);
    MatrixXcd expect = MatrixXcd::Zero(4, sp.n());
    for (const Cell& c : obs.cells())
        expect(c.k, c.a) = 2.0 * x(c.k, c.a);
    EXPECT_LT(rel_diff_t(observed_lift(obs, sp), lift_H(expect, sp)), 1e-14);
}

TEST(ObservedLift, EmptyIsAnError)
{
    std::mt19937_64 rng(62);
    const HankelSpace sp(4, 3, 2);
    const auto obs = random_obs(sp, 3, rng).slice(0, 0);
    EXPECT_THROW(observed_lift(obs, sp), ConfigError);
    EXPECT_THROW(spectral_init(obs, sp, 1), ConfigError);
}

TEST(SpectralInit, FullSamplingReconstructsExactModel)
{
    const auto model = random_model(31, 8, 3, 11);
    const MatrixXcd x = gen_signal(model);
    const HankelSpace sp = make_space_for(31, 8);
    for (InitRoute route : {InitRoute::Dense, InitRoute::Lean})
    {
        InitOptions opts;
        opts.route = route;
        const auto res = spectral_init(full_obs(sp, x), sp, 3, opts);
        EXPECT_EQ(res.dense_route, route == InitRoute::Dense);
        EXPECT_LT(rel_diff_t(assemble(res.factors), lift_H(x, sp)), 1e-8);
    }
}

TEST(SpectralInit, SingleSinusoid)
{
    SpectralModel m;
    m.n = 40;
    m.s = 5;
    m.freqs = {0.3};
    m.dampings = {0.0};
    std::mt19937_64 rng(63);
    m.amplitudes = random_matrix(5, 1, rng);
    const MatrixXcd x = gen_signal(m);
    const HankelSpace sp = make_space_for(40, 5);
    const auto f = sequential_init(full_obs(sp, x), sp, 1);
    EXPECT_LT(rel_diff(reconstruct_X(f, sp), x), 1e-10);
}

TEST(SpectralInit, DenseAndLeanAgree)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed)
    {
        const auto model = random_model(47, 12, 3, 100 + seed);
        const MatrixXcd x = gen_signal(model);
        const HankelSpace sp = make_space_for(47, 12);
        const ObservationSet<cdouble> obs(
            sp, sample_observations(sp, 300, SamplingMode::WithReplacement, seed), x);
        InitOptions dense, lean;
        dense.route = InitRoute::Dense;
        lean.route  = InitRoute::Lean;
        const auto a = spectral_init(obs, sp, 3, dense);
        const auto b = spectral_init(obs, sp, 3, lean);
        EXPECT_LT(subspace_distance(a.factors.L, b.factors.L), 1e-8);
        EXPECT_LT(subspace_distance(a.factors.R, b.factors.R), 1e-8);
        EXPECT_LT(subspace_distance(a.factors.V, b.factors.V), 1e-8);
        EXPECT_LT(rel_diff_t(assemble(a.factors), assemble(b.factors)), 1e-8);
        EXPECT_NEAR(a.sigma_max, b.sigma_max, 1e-8 * a.sigma_max);
    }
}

TEST(SpectralInit, FactorsAreOrthonormal)
{
    std::mt19937_64 rng(64);
    const HankelSpace sp(9, 8, 6);
    const auto obs = random_obs(sp, 60, rng);
    for (InitRoute route : {InitRoute::Dense, InitRoute::Lean})
    {
        InitOptions opts;
        opts.route = route;
        const auto f = spectral_init(obs, sp, 3, opts).factors;
        EXPECT_LT(orthonormality_error(f.L), 1e-12);
        EXPECT_LT(orthonormality_error(f.R), 1e-12);
        EXPECT_LT(orthonormality_error(f.V), 1e-12);
    }
}

TEST(SpectralInit, ModeThreeSubspaceIdentity)
{
    // V from M3(Z x1 L^H) spans the same space as from M3(Z x1 L L^H).
    std::mt19937_64 rng(65);
    const HankelSpace sp(10, 9, 7);
    const auto obs = random_obs(sp, 80, rng);
    const auto f = sequential_init(obs, sp, 3);
    const Tensor3cd z0 = observed_lift(obs, sp);
    const Tensor3cd zll = mode_product(z0, MatrixXcd(f.L * f.L.adjoint()), 1);
    const MatrixXcd v = top_r_svd(matricize(zll, 3), 3).U;
    EXPECT_LT(subspace_distance(f.V, v), 1e-8);
}

TEST(SpectralInit, MonteCarloAccuracy)
{
    const HankelSpace sp = make_space_for(63, 32);
    const Index m = static_cast<Index>(std::llround(0.6 * 32 * 63));
    int good = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed)
    {
        const MatrixXcd x = gen_signal(random_model(63, 32, 4, 500 + seed));
        const ObservationSet<cdouble> obs(
            sp, sample_observations(sp, m, SamplingMode::WithoutReplacement, 700 + seed), x);
        const auto f = sequential_init(obs, sp, 4);
        const Tensor3cd truth = lift_H(x, sp);
        if (rel_diff_t(assemble(f), truth) < 0.5)
            ++good;
    }
    EXPECT_GE(good, 27);
}

TEST(ScaledProject, InsideRadiusIsIdentity)
{
    std::mt19937_64 rng(66);
    const HankelSpace sp(6, 5, 4);
    const auto f = scalht::testing::random_factors(sp, 2, rng);
    for (double radius : {0.0, -1.0, std::numeric_limits<double>::infinity(), 1e12})
    {
        const auto [l, r] = scaled_project(f.L, f.R, f.V, f.S, radius, sp);
        EXPECT_EQ(l, f.L);
        EXPECT_EQ(r, f.R);
    }
}

TEST(ScaledProject, OffendingRowIsScaled)
{
    std::mt19937_64 rng(67);
    const HankelSpace sp(6, 5, 4);
    auto f = scalht::testing::random_factors(sp, 2, rng);
    auto row_norm = [](const MatrixXcd& m, const MatrixXcd& g, Index i) {
        return std::sqrt(std::real(m.row(i).dot(m.row(i) * g)));
    };
    // The L Gram does not depend on L, so row 2 can be placed at 2B/sqrt(n)
    // with every other row inside.
    const MatrixXcd gl = scaled_grams(f).GL;
    double max_other = 0;
    for (Index i = 0; i < f.L.rows(); ++i)
        if (i != 2)
            max_other = std::max(max_other, row_norm(f.L, gl, i));
    const double bound = 1.01 * max_other;
    f.L.row(2) *= 2.0 * bound / row_norm(f.L, gl, 2);

    const ScaledGrams<cdouble> sg = scaled_grams(f);
    const double radius = bound * std::sqrt(double(sp.n()));
    const auto [l, r] = scaled_project(f.L, f.R, f.V, f.S, radius, sp);
    for (Index i = 0; i < f.L.rows(); ++i)
    {
        if (i == 2)
            EXPECT_LT(rel_diff(MatrixXcd(l.row(i)), MatrixXcd(0.5 * f.L.row(i))), 1e-12);
        else
            EXPECT_EQ(MatrixXcd(l.row(i)), MatrixXcd(f.L.row(i)));
        EXPECT_LE(row_norm(l, sg.GL, i), bound * (1 + 1e-12));
    }
    for (Index i = 0; i < f.R.rows(); ++i)
    {
        const double before = row_norm(f.R, sg.GR, i);
        const double after  = row_norm(r, sg.GR, i);
        if (before <= bound)
            EXPECT_EQ(MatrixXcd(r.row(i)), MatrixXcd(f.R.row(i)));
        else
            EXPECT_NEAR(after, bound, 1e-12 * bound);
        EXPECT_LE(after, before * (1 + 1e-12));
    }
}
