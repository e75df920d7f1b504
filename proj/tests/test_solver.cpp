#include <cmath>

#include <gtest/gtest.h>

#include <scalht/experiments.hpp>
#include <scalht/oracle.hpp>
#include <scalht/signal.hpp>
#include <scalht/solver.hpp>

#include "test_support.hpp"

using namespace scalht;
using scalht::testing::random_factors;
using scalht::testing::random_matrix;
using scalht::testing::random_obs;
using scalht::testing::rel_diff;
using scalht::testing::rel_diff_t;

namespace
{

double factors_rel_diff(const TuckerFactors<cdouble>& a, const TuckerFactors<cdouble>& b)
{
    const double num = std::sqrt((a.L - b.L).squaredNorm() + (a.R - b.R).squaredNorm() +
                                 (a.V - b.V).squaredNorm() + (a.S - b.S).squaredNorm());
    return num / b.norm();
}

GradientBundle<cdouble> random_bundle(const TuckerFactors<cdouble>& f, std::mt19937_64& rng)
{
    return {random_matrix(f.L.rows(), f.rank(), rng), random_matrix(f.R.rows(), f.rank(), rng),
            random_matrix(f.V.rows(), f.rank(), rng),
            scalht::testing::random_tensor(f.rank(), f.rank(), f.rank(), rng)};
}

struct Problem
{
    HankelSpace space;
    MatrixXcd x;
    ObservationSet<cdouble> obs;
};

Problem make_problem(Index n, Index s, Index r, double p, std::uint64_t seed)
{
    const HankelSpace sp = make_space_for(n, s);
    const MatrixXcd x = gen_signal(random_model(n, s, r, seed));
    const Index m = samples_for_ratio(p, n, s);
    return {sp, x,
            ObservationSet<cdouble>(
                sp, sample_observations(sp, m, SamplingMode::WithoutReplacement, seed + 1), x)};
}

} // namespace

TEST(ScaledStep, MatchesOracle)
{
    std::mt19937_64 rng(70);
    const HankelSpace sp(5, 4, 3);
    for (int trial = 0; trial < 10; ++trial)
    {
        const auto f = random_factors(sp, 2, rng);
        const auto g = random_bundle(f, rng);
        EXPECT_LT(factors_rel_diff(scaled_step(f, g, 0.3), oracle::oracle_scaled_step(f, g, 0.3)),
                  1e-10);
    }
}

TEST(ScaledStep, FixedPoints)
{
    std::mt19937_64 rng(71);
    const HankelSpace sp(5, 4, 3);
    const auto f = random_factors(sp, 2, rng);
    GradientBundle<cdouble> zero{MatrixXcd::Zero(5, 2), MatrixXcd::Zero(4, 2),
                                 MatrixXcd::Zero(3, 2), Tensor3cd::Zero({2, 2, 2})};
    EXPECT_EQ(factors_rel_diff(scaled_step(f, zero, 0.3), f), 0.0);
    EXPECT_EQ(factors_rel_diff(scaled_step(f, random_bundle(f, rng), 0.0), f), 0.0);
}

TEST(ScaledStep, GroundTruthIsStationary)
{
    const Problem pr = make_problem(31, 8, 3, 0.5, 3);
    const auto f = scalht::testing::truth_factors(pr.x, pr.space, 3);
    for (double eta : {0.1, 0.25, 1.0})
    {
        const auto next = scaled_step(f, grad_all(f, pr.obs, pr.space), eta);
        EXPECT_LT(factors_rel_diff(next, f), 1e-9);
    }
}

TEST(ScaledStep, RankDeficientGramNamesFactor)
{
    std::mt19937_64 rng(72);
    const HankelSpace sp(5, 4, 3);
    auto f = random_factors(sp, 2, rng);
    // Only L^H L is singular: the R and V preconditioners keep full rank
    // through the Kronecker factor with the other Grams.
    f.L.col(1) = f.L.col(0);
    try
    {
        scaled_step(f, random_bundle(f, rng), 0.25);
        FAIL() << "expected NumericalError";
    }
    catch (const NumericalError& e)
    {
        EXPECT_NE(std::string(e.what()).find("ill-conditioned"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("L^H L"), std::string::npos) << e.what();
    }
}

TEST(ReconstructX, Cases)
{
    std::mt19937_64 rng(73);
    const Problem pr = make_problem(23, 6, 2, 0.5, 9);
    EXPECT_LT(rel_diff(reconstruct_X(scalht::testing::truth_factors(pr.x, pr.space, 2), pr.space),
                       pr.x),
              1e-10);

    auto f = random_factors(pr.space, 2, rng);
    const MatrixXcd dense =
        weight_D(adjoint_G(assemble(f), pr.space), pr.space, WeightDirection::Inverse);
    EXPECT_LT(rel_diff(reconstruct_X(f, pr.space), dense), 1e-12);

    f.L.setZero();
    EXPECT_EQ(reconstruct_X(f, pr.space).norm(), 0.0);
}

TEST(SolverConfig, Validation)
{
    SolverConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    for (double eta : {0.0, -0.1, 1.5})
    {
        SolverConfig bad = cfg;
        bad.eta = eta;
        EXPECT_THROW(bad.validate(), ConfigError);
    }
    SolverConfig bad = cfg;
    bad.tol_core = 0.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.r = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.projection.mode   = ProjectionMode::Radius;
    bad.projection.radius = 0.0;
    EXPECT_THROW(bad.validate(), ConfigError);

    SolverConfig ok = cfg;
    ok.eta = 1.0;
    EXPECT_NO_THROW(ok.validate());

    const Problem pr = make_problem(15, 4, 2, 0.5, 1);
    SolverConfig big = cfg;
    big.r = 9;
    EXPECT_THROW(scalht_run(pr.obs, pr.space, big), DimensionError);
    EXPECT_THROW(scalht_run(pr.obs.slice(0, 0), pr.space, cfg), ConfigError);
}

TEST(ScalhtRun, FullSamplingConvergesFast)
{
    const Problem pr = make_problem(63, 16, 4, 1.0, 21);
    SolverConfig cfg;
    cfg.r = 4;
    const auto res = scalht_run(pr.obs, pr.space, cfg, &pr.x);
    EXPECT_LE(res.iterations, 5);
    EXPECT_LE(rel_diff(res.X_hat, pr.x), 1e-6);
    EXPECT_EQ(res.reason, Termination::CoreChange);
}

TEST(ScalhtRun, RecoversFromPartialSamples)
{
    const Problem pr = make_problem(63, 32, 4, 0.5, 22);
    SolverConfig cfg;
    cfg.r = 4;
    const auto res = scalht_run(pr.obs, pr.space, cfg, &pr.x);
    EXPECT_LE(rel_diff(res.X_hat, pr.x), 1e-3);

    // Trace bookkeeping.
    ASSERT_EQ(static_cast<Index>(res.trace.size()), res.iterations);
    for (std::size_t k = 0; k < res.trace.size(); ++k)
    {
        EXPECT_EQ(res.trace[k].iter, static_cast<Index>(k));
        EXPECT_TRUE(std::isfinite(res.trace[k].rel_err));
        if (k > 0)
            EXPECT_GE(res.trace[k].seconds, res.trace[k - 1].seconds);
    }
    // Loss decreases over every 10-iteration window.
    for (std::size_t k = 0; k + 10 < res.trace.size(); ++k)
        EXPECT_LT(res.trace[k + 10].loss, res.trace[k].loss) << "k=" << k;
}

TEST(ScalhtRun, LinearRate)
{
    const Problem pr = make_problem(63, 32, 4, 0.5, 23);
    SolverConfig cfg;
    cfg.r            = 4;
    cfg.tol_core     = 1e-14;
    cfg.target_error = 1e-9;
    const auto res = scalht_run(pr.obs, pr.space, cfg, &pr.x);
    std::vector<double> it, le;
    for (const auto& rec : res.trace)
        if (rec.rel_err <= 1e-2 && rec.rel_err >= 1e-8)
        {
            it.push_back(double(rec.iter));
            le.push_back(std::log10(rec.rel_err));
        }
    ASSERT_GE(it.size(), 5u);
    const LineFit fit = fit_line(it, le);
    EXPECT_LT(fit.slope, 0.0);
    for (std::size_t i = 0; i < it.size(); ++i)
    {
        const double pred = fit.intercept + fit.slope * it[i];
        EXPECT_LE(std::abs(le[i] - pred), 0.2 * std::abs(pred)) << "iter " << it[i];
    }
}

TEST(ScalhtRun, TargetErrorStops)
{
    const Problem pr = make_problem(63, 32, 4, 0.6, 24);
    SolverConfig cfg;
    cfg.r            = 4;
    cfg.target_error = 1e-2;
    const auto res = scalht_run(pr.obs, pr.space, cfg, &pr.x);
    EXPECT_EQ(res.reason, Termination::TargetError);
    EXPECT_LE(res.trace.back().rel_err, 1e-2);
    EXPECT_GT(res.trace.front().rel_err, 1e-2);
}

TEST(ScalhtRun, MaxItersIsNormal)
{
    const Problem pr = make_problem(31, 8, 2, 0.6, 25);
    SolverConfig cfg;
    cfg.r         = 2;
    cfg.max_iters = 3;
    cfg.tol_core  = 1e-300;
    const auto res = scalht_run(pr.obs, pr.space, cfg, &pr.x);
    EXPECT_EQ(res.reason, Termination::MaxIters);
    EXPECT_EQ(res.iterations, 3);
    EXPECT_EQ(res.trace.size(), 4u);
}

TEST(ScalhtRun, SplitMode)
{
    const Problem pr = make_problem(63, 32, 2, 0.9, 26);
    SolverConfig cfg;
    cfg.r       = 2;
    cfg.split_K = 4;
    cfg.tol_core = 1e-300;
    const auto res = scalht_run(pr.obs, pr.space, cfg, &pr.x);
    EXPECT_EQ(res.iterations, 4);
    EXPECT_EQ(res.reason, Termination::MaxIters);
    EXPECT_LT(res.trace.back().rel_err, res.trace.front().rel_err);

    // Deterministic for a fixed seed.
    const auto again = scalht_run(pr.obs, pr.space, cfg, &pr.x);
    EXPECT_EQ(res.X_hat, again.X_hat);

    SolverConfig too_many = cfg;
    too_many.split_K = pr.obs.m();
    EXPECT_THROW(scalht_run(pr.obs, pr.space, too_many), ConfigError);
}

TEST(ScalhtRun, ProjectionEnabledStillRecovers)
{
    const Problem pr = make_problem(63, 32, 2, 0.6, 27);
    SolverConfig cfg;
    cfg.r               = 2;
    cfg.projection.mode = ProjectionMode::Auto;
    const auto res = scalht_run(pr.obs, pr.space, cfg, &pr.x);
    EXPECT_LE(rel_diff(res.X_hat, pr.x), 1e-3);
}

TEST(ScalhtRun, IterationsNeverMaterializeLiftedTensor)
{
    const Problem pr = make_problem(127, 64, 3, 0.3, 28);
    const Index r = 3;
    auto f = sequential_init(pr.obs, pr.space, r);
    auto& probe = detail::AllocationProbe::peak();
    probe = 0;
    detail::AllocationProbe::armed() = true;
    for (int k = 0; k < 3; ++k)
    {
        const Evaluation<cdouble> ev = evaluate(f, pr.obs, pr.space);
        f = detail::scaled_step(f, ev.grad, 0.25, ev.factor, ev.scaled);
    }
    detail::AllocationProbe::armed() = false;
    const Index n = pr.space.n(), s = pr.space.s();
    EXPECT_GT(probe, 0);
    EXPECT_LT(probe, pr.space.lifted_size());
    // Largest tensor is the r x r x n convolution tensor.
    EXPECT_LE(probe, r * r * n + (s + n) * r + r * r * r + pr.obs.m());
}
