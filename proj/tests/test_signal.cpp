#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <scalht/signal.hpp>

#include "test_support.hpp"

using namespace scalht;
using scalht::testing::random_matrix;
using scalht::testing::rel_diff;

namespace
{

SpectralModel one_component(Index n, Index s, double f, double tau, const MatrixXcd& b)
{
    SpectralModel m;
    m.n          = n;
    m.s          = s;
    m.freqs      = {f};
    m.dampings   = {tau};
    m.amplitudes = b;
    return m;
}

} // namespace

TEST(GenSignal, ConstantSignal)
{
    const MatrixXcd x = gen_signal(one_component(9, 3, 0.0, 0.0, MatrixXcd::Ones(3, 1)));
    EXPECT_LT(rel_diff(x, MatrixXcd(MatrixXcd::Ones(3, 9))), 1e-15);
}

TEST(GenSignal, DampedColumnsDecay)
{
    const double tau = 3.0;
    const MatrixXcd x = gen_signal(one_component(12, 2, 0.0, tau, MatrixXcd::Ones(2, 1)));
    for (Index j = 1; j < 12; ++j)
        for (Index l = 0; l < 2; ++l)
            EXPECT_NEAR(std::abs(x(l, j) / x(l, j - 1) - std::exp(-tau)), 0.0, 1e-13);
}

TEST(GenSignal, MatchesDoubleSum)
{
    std::mt19937_64 rng(80);
    SpectralModel m;
    m.n        = 8;
    m.s        = 4;
    m.freqs    = {0.1, 0.3};
    m.dampings = {0.0, 0.0};
    m.amplitudes = random_matrix(4, 2, rng);
    m.amplitudes.col(0).normalize();
    m.amplitudes.col(1).normalize();
    const MatrixXcd x = gen_signal(m);
    for (Index l = 0; l < 4; ++l)
        for (Index j = 0; j < 8; ++j)
        {
            cdouble v = 0;
            for (Index k = 0; k < 2; ++k)
                v += m.amplitudes(l, k) *
                     std::polar(1.0, 2 * std::numbers::pi * m.freqs[std::size_t(k)] * double(j));
            EXPECT_LT(std::abs(x(l, j) - v), 1e-13);
        }
}

TEST(GenSignal, LinearInAmplitudes)
{
    std::mt19937_64 rng(81);
    SpectralModel a = random_model(10, 3, 2, 4);
    SpectralModel b = a;
    b.amplitudes    = random_matrix(3, 2, rng);
    SpectralModel sum = a;
    sum.amplitudes    = a.amplitudes + 2.0 * b.amplitudes;
    EXPECT_LT(rel_diff(gen_signal(sum), MatrixXcd(gen_signal(a) + 2.0 * gen_signal(b))), 1e-14);
}

TEST(GenSignal, RandomModelIsDeterministicAndNormalized)
{
    const SpectralModel a = random_model(20, 5, 3, 17);
    const SpectralModel b = random_model(20, 5, 3, 17);
    EXPECT_EQ(a.freqs, b.freqs);
    EXPECT_EQ(a.amplitudes, b.amplitudes);
    for (Index k = 0; k < 3; ++k)
    {
        EXPECT_NEAR(a.amplitudes.col(k).norm(), 1.0, 1e-14);
        EXPECT_GE(a.freqs[std::size_t(k)], 0.0);
        EXPECT_LT(a.freqs[std::size_t(k)], 1.0);
    }
}

TEST(GenSignal, LiftIsSumOfRankOneTerms)
{
    const SpectralModel m = random_model(11, 3, 2, 5, 0.05);
    const HankelSpace sp = make_space_for(11, 3);
    const Tensor3cd z = lift_H(gen_signal(m), sp);
    const Eigen::VectorXcd p = m.poles();
    Tensor3cd expect = Tensor3cd::Zero(sp.lifted_dims());
    for (Index k = 0; k < 2; ++k)
        for (Index l = 0; l < 3; ++l)
            for (Index j = 0; j < sp.n2(); ++j)
                for (Index i = 0; i < sp.n1(); ++i)
                    expect(i, j, l) += std::pow(p[k], double(i)) * std::pow(p[k], double(j)) *
                                       m.amplitudes(l, k);
    EXPECT_LT(scalht::testing::rel_diff_t(z, expect), 1e-12);
}

TEST(AddNoise, Cases)
{
    std::mt19937_64 rng(82);
    const MatrixXcd x = random_matrix(4, 5, rng);
    EXPECT_EQ(add_noise(x, 0.0, 1), x);
    EXPECT_EQ(add_noise(x, 0.3, 2), add_noise(x, 0.3, 2));
    EXPECT_NE(add_noise(x, 0.3, 2), add_noise(x, 0.3, 3));
    EXPECT_THROW(add_noise(x, -1.0, 1), ConfigError);

    const MatrixXcd zero = MatrixXcd::Zero(100, 1000);
    const double sigma = 0.7;
    const MatrixXcd e = add_noise(zero, sigma, 4);
    const double var = e.squaredNorm() / double(e.size());
    EXPECT_NEAR(var, sigma * sigma, 0.05 * sigma * sigma);
    EXPECT_NEAR(e.real().squaredNorm() / double(e.size()), sigma * sigma / 2, 0.05 * sigma * sigma);
}

TEST(AddNoise, SnrHelper)
{
    const MatrixXcd x = gen_signal(random_model(63, 32, 4, 8));
    for (double snr : {-20.0, 0.0, 20.0, 37.5, 60.0})
    {
        const double sigma = sigma_for_snr(x, snr);
        const double got =
            10.0 * std::log10(x.squaredNorm() / (double(x.size()) * sigma * sigma));
        EXPECT_NEAR(got, snr, 0.01);
    }
}

TEST(Diagnostics, SingleSinusoid)
{
    const MatrixXcd x = gen_signal(one_component(21, 4, 0.2, 0.0, MatrixXcd::Ones(4, 1)));
    const HankelSpace sp = make_space_for(21, 4);
    const ModelDiagnostics d = diagnostics(x, sp, 1);
    EXPECT_NEAR(d.kappa, 1.0, 1e-12);
    EXPECT_EQ(d.ranks, (std::array<Index, 3>{1, 1, 1}));
    EXPECT_NEAR(d.c_s, std::max(21.0 / sp.n1(), 21.0 / sp.n2()), 1e-15);
}

TEST(Diagnostics, TwoFrequencies)
{
    SpectralModel m = random_model(9, 4, 2, 9);
    m.freqs = {0.15, 0.55};
    const ModelDiagnostics d = diagnostics(gen_signal(m), make_space_for(9, 4), 2);
    EXPECT_EQ(d.ranks, (std::array<Index, 3>{2, 2, 2}));
    EXPECT_GE(d.kappa, 1.0);
}

TEST(Diagnostics, ExactModelsHaveRankR)
{
    std::mt19937_64 rng(83);
    for (int trial = 0; trial < 20; ++trial)
    {
        const Index r = 1 + trial % 3;
        const Index n = 11 + trial % 5;
        const Index s = 3 + trial % 4;
        SpectralModel m = random_model(n, s, r, 300 + trial);
        const double offset = std::uniform_real_distribution<double>(0, 1)(rng);
        for (Index k = 0; k < r; ++k)
            m.freqs[std::size_t(k)] = std::fmod(offset + double(k) / double(r), 1.0);
        const ModelDiagnostics d = diagnostics(gen_signal(m), make_space_for(n, s), r);
        EXPECT_EQ(d.ranks, (std::array<Index, 3>{r, r, r})) << "trial " << trial;
    }
}

TEST(Diagnostics, SeparatedFrequenciesAreIncoherent)
{
    SpectralModel m = random_model(63, 32, 4, 10);
    m.freqs = {0.05, 0.3, 0.55, 0.8};
    const ModelDiagnostics d = diagnostics(gen_signal(m), make_space_for(63, 32), 4);
    EXPECT_LE(d.mu0, 10.0);
    EXPECT_GT(d.mu0, 0.0);
    EXPECT_EQ(d.ranks, (std::array<Index, 3>{4, 4, 4}));
}

TEST(Diagnostics, DenseCap)
{
    const MatrixXcd x = gen_signal(random_model(63, 32, 2, 11));
    EXPECT_THROW(diagnostics(x, make_space_for(63, 32), 2, 1e-9, 1000), DimensionError);
}
