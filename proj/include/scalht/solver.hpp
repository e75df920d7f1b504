///
/// \file solver.hpp
///
/// Scaled gradient descent on Tucker factors of the lifted Hankel tensor.
///
/// Each iteration
///
///   `L+ = L - eta dL GL^{-1}`, `R+ = R - eta dR GR^{-1}`, `V+ = V - eta dV GV^{-1}`,
///   `S+ = S - eta ((L^H L)^{-1}, (R^H R)^{-1}, (V^H V)^{-1}) . dS`,
///
/// optionally followed by the row projection of (L+, R+). The estimate is
/// `X^ = D^{-1}(V B^H)`.
///
#ifndef SCALHT_SOLVER_HPP
#define SCALHT_SOLVER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <scalht/common.hpp>
#include <scalht/gradient.hpp>
#include <scalht/hankel.hpp>
#include <scalht/init.hpp>
#include <scalht/kernels.hpp>
#include <scalht/tensor.hpp>

namespace scalht
{

///
/// ### SolverConfig
///
struct SolverConfig
{
    Index r = 1;
    double eta = 0.25;
    Index max_iters = 500;
    /// Stop when `||S+ - S||_F / ||S||_F <= tol_core`.
    double tol_core = 1e-7;
    ProjectionConfig projection;
    /// Number of disjoint iteration splits; 0 reuses the full sample set.
    Index split_K = 0;
    std::uint64_t seed = 0;
    /// Stop once the relative error reaches this value (needs ground truth;
    /// 0 disables).
    double target_error = 0.0;
    /// Largest lifted tensor the initialization may materialize.
    Index dense_cap = Index(1) << 22;

    /// \throw ConfigError on out-of-range values
    void validate() const
    {
        detail::require_config(r >= 1, "rank must be at least 1");
        detail::require_config(eta > 0.0 && eta <= 1.0, "step size must be in (0, 1]");
        detail::require_config(max_iters >= 0, "max_iters must be nonnegative");
        detail::require_config(tol_core > 0.0, "tol_core must be positive");
        detail::require_config(split_K >= 0, "split_K must be nonnegative");
        detail::require_config(target_error >= 0.0, "target_error must be nonnegative");
        detail::require_config(projection.mode != ProjectionMode::Radius ||
                                   projection.radius > 0.0,
                               "projection radius must be positive");
        detail::require_config(projection.c_b > 0.0, "projection constant must be positive");
    }
};

enum class Termination
{
    CoreChange,  ///< relative core change below tol_core
    MaxIters,    ///< iteration cap (or splits exhausted)
    TargetError, ///< relative error reached target_error
    Diverged     ///< core change above 1e6 or non-finite loss
};

inline std::string to_string(Termination t)
{
    switch (t)
    {
    case Termination::CoreChange:
        return "core_change";
    case Termination::MaxIters:
        return "max_iters";
    case Termination::TargetError:
        return "target_error";
    default:
        return "diverged";
    }
}

///
/// One record per iterate `k`: loss and relative error of `F^k`, relative
/// core change of the step `k -> k+1` (NaN if no step was taken), and wall
/// time since the start of the run.
///
struct IterRecord
{
    Index iter = 0;
    double loss = 0.0;
    double core_change = std::numeric_limits<double>::quiet_NaN();
    double rel_err = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;
};

using RunTrace = std::vector<IterRecord>;

template <typename Scalar>
struct SolveResult
{
    TuckerFactors<Scalar> factors;
    Matrix<Scalar> X_hat;
    RunTrace trace;
    Termination reason = Termination::MaxIters;
    /// Number of gradient steps taken.
    Index iterations = 0;
    double init_seconds = 0.0;
    double total_seconds = 0.0;
};

namespace detail
{

template <typename Scalar>
Tensor3<Scalar> solve_mode(const Tensor3<Scalar>& t, const Matrix<Scalar>& g,
                           int mode, const std::string& label)
{
    return dematricize(solve_hpd(g, matricize(t, mode), label), mode, t.dims());
}

// Scaled step from precomputed Grams.
template <typename Scalar>
TuckerFactors<Scalar> scaled_step(const TuckerFactors<Scalar>& f,
                                  const GradientBundle<Scalar>& g, RealOf<Scalar> eta,
                                  const FactorGrams<Scalar>& fg,
                                  const ScaledGrams<Scalar>& sg)
{
    TuckerFactors<Scalar> out;
    out.L = f.L - eta * solve_hpd_right(sg.GL, g.dL, "L (scaled)");
    out.R = f.R - eta * solve_hpd_right(sg.GR, g.dR, "R (scaled)");
    out.V = f.V - eta * solve_hpd_right(sg.GV, g.dV, "V (scaled)");
    Tensor3<Scalar> ds = solve_mode(g.dS, fg.LL, 1, "L^H L");
    ds = solve_mode(ds, fg.RR, 2, "R^H R");
    ds = solve_mode(ds, fg.VV, 3, "V^H V");
    out.S = f.S - eta * ds;
    return out;
}

} // namespace detail

///
/// One scaled gradient step. Inverse Grams are applied by Cholesky solves.
///
/// \throw NumericalError  if a Gram has condition number above 1e12; the
///                        message names the factor
///
template <typename Scalar>
TuckerFactors<Scalar> scaled_step(const TuckerFactors<Scalar>& f,
                                  const GradientBundle<Scalar>& g, RealOf<Scalar> eta)
{
    f.check();
    const FactorGrams<Scalar> fg = factor_grams(f);
    return detail::scaled_step(f, g, eta, fg, scaled_grams(f.S, fg));
}

/// `X^ = D^{-1}(V B^H)` from factors.
template <typename Scalar>
Matrix<Scalar> reconstruct_X(const TuckerFactors<Scalar>& f, const HankelSpace& space)
{
    const FactorizedZ<Scalar> fz = dehankel_factored(f, space);
    return weight_D(fz.dense(), space, WeightDirection::Inverse);
}

///
/// Full run: spectral initialization followed by scaled gradient steps.
///
/// With `cfg.split_K = K > 0` the samples are shuffled and cut into K+1 equal
/// parts (leftovers dropped); part 0 feeds the initialization and part
/// `1 + (k mod K)` feeds iteration k, so at most K steps are taken.
///
/// `truth`, when given, is the `s x n` signal used for the relative error
/// trace and for `cfg.target_error`.
///
template <typename Scalar>
SolveResult<Scalar> scalht_run(const ObservationSet<Scalar>& obs,
                               const HankelSpace& space, const SolverConfig& cfg,
                               const Matrix<Scalar>* truth = nullptr)
{
    using Real  = RealOf<Scalar>;
    using Clock = std::chrono::steady_clock;
    cfg.validate();
    detail::require_config(!obs.empty(), "observation set is empty");
    detail::require(obs.space() == space, "observation set belongs to another space");
    detail::require(cfg.r <= std::min({space.n1(), space.n2(), space.s()}),
                    "rank exceeds min(n1, n2, s)");
    if (truth)
        detail::check_signal_shape(*truth, space);

    const auto t0 = Clock::now();
    auto elapsed  = [&]() {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    };

    std::vector<ObservationSet<Scalar>> parts;
    Index max_iters = cfg.max_iters;
    if (cfg.split_K > 0)
    {
        const Index per = obs.m() / (cfg.split_K + 1);
        detail::require_config(per >= 1, "too few samples for the requested splits");
        std::vector<Cell> shuffled = obs.samples();
        Vector<Scalar> values      = obs.values();
        std::vector<Index> order(shuffled.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = static_cast<Index>(i);
        std::mt19937_64 rng(cfg.seed ^ 0x5eed5eedULL);
        std::shuffle(order.begin(), order.end(), rng);
        for (Index part = 0; part <= cfg.split_K; ++part)
        {
            std::vector<Cell> cells;
            Vector<Scalar> vals(per);
            for (Index i = 0; i < per; ++i)
            {
                const Index src = order[static_cast<std::size_t>(part * per + i)];
                cells.push_back(shuffled[static_cast<std::size_t>(src)]);
                vals[i] = values[src];
            }
            parts.emplace_back(space, std::move(cells), std::move(vals));
        }
        max_iters = std::min(max_iters, cfg.split_K);
    }
    const ObservationSet<Scalar>& init_obs = parts.empty() ? obs : parts.front();

    InitOptions iopts;
    iopts.dense_cap  = cfg.dense_cap;
    iopts.projection = cfg.projection;
    InitResult<Scalar> init = spectral_init(init_obs, space, cfg.r, iopts);

    SolveResult<Scalar> res;
    res.init_seconds = elapsed();
    TuckerFactors<Scalar> f = std::move(init.factors);
    const Real truth_norm = truth ? truth->norm() : Real(0);
    const Eigen::VectorXd& inv_sw = space.inv_sqrt_weights();

    auto rel_error = [&](const Matrix<Scalar>& b, const Matrix<Scalar>& v) {
        if (!truth)
            return std::numeric_limits<double>::quiet_NaN();
        const Matrix<Scalar> xh =
            (v * b.adjoint()) * inv_sw.template cast<Scalar>().asDiagonal();
        return static_cast<double>((xh - *truth).norm() / truth_norm);
    };

    res.reason = Termination::MaxIters;
    for (Index k = 0;; ++k)
    {
        const ObservationSet<Scalar>& active =
            parts.empty() ? obs
                          : parts[static_cast<std::size_t>(1 + (k % std::max<Index>(cfg.split_K, 1)))];
        Evaluation<Scalar> ev = evaluate(f, active, space);

        IterRecord rec;
        rec.iter    = k;
        rec.loss    = static_cast<double>(ev.loss());
        rec.rel_err = rel_error(ev.B, f.V);

        if (!std::isfinite(rec.loss))
        {
            rec.seconds = elapsed();
            res.trace.push_back(rec);
            res.reason = Termination::Diverged;
            break;
        }
        if (truth && cfg.target_error > 0.0 && rec.rel_err <= cfg.target_error)
        {
            rec.seconds = elapsed();
            res.trace.push_back(rec);
            res.reason = Termination::TargetError;
            break;
        }
        if (k >= max_iters)
        {
            rec.seconds = elapsed();
            res.trace.push_back(rec);
            res.reason = Termination::MaxIters;
            break;
        }

        TuckerFactors<Scalar> next =
            detail::scaled_step(f, ev.grad, Real(cfg.eta), ev.factor, ev.scaled);
        if (init.radius > 0.0)
        {
            auto [l, r] = scaled_project(next.L, next.R, next.V, next.S, init.radius, space);
            next.L = std::move(l);
            next.R = std::move(r);
        }
        const Real s_norm = f.S.norm();
        const double change =
            static_cast<double>((next.S - f.S).norm() / std::max(s_norm, Real(1e-300)));
        rec.core_change = change;
        rec.seconds     = elapsed();
        res.trace.push_back(rec);
        f = std::move(next);
        ++res.iterations;

        if (!std::isfinite(change) || change > 1e6)
        {
            res.reason = Termination::Diverged;
            break;
        }
        if (change <= cfg.tol_core)
        {
            res.reason = Termination::CoreChange;
            break;
        }
    }

    res.X_hat         = reconstruct_X(f, space);
    res.factors       = std::move(f);
    res.total_seconds = elapsed();
    return res;
}

} // namespace scalht

#endif /* SCALHT_SOLVER_HPP */
