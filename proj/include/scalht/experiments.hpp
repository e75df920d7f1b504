///
/// \file experiments.hpp
///
/// Monte-Carlo drivers: recovery trials, phase transitions, success-rate
/// curves, convergence traces, runtime scaling, noise sweeps and the sparse
/// linear array DOA pipeline. Every driver is deterministic given its seed;
/// trials run concurrently and results are collected by trial index.
///
#ifndef SCALHT_EXPERIMENTS_HPP
#define SCALHT_EXPERIMENTS_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <scalht/common.hpp>
#include <scalht/hankel.hpp>
#include <scalht/solver.hpp>

namespace scalht
{

/// Well-mixed per-trial seed derived from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Run `body(i)` for i in [0, count) on up to `threads` workers (0 picks the
/// hardware concurrency). Exceptions from `body` are rethrown on the caller.
void parallel_for(Index count, Index threads, const std::function<void(Index)>& body);

///
/// ### Table
///
/// Column names plus numeric rows; written as CSV with a header line.
///
struct Table
{
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row);
    void write_csv(const std::string& path) const;
    std::string to_csv() const;
};

///
/// One synthetic recovery problem.
///
struct RecoveryTrial
{
    Index n = 63;
    Index s = 32;
    Index r = 2;
    Index m = 0; ///< number of samples
    SamplingMode sampling = SamplingMode::WithoutReplacement;
    double damping = 0.0;
    /// Signal-to-noise ratio in dB; infinity means noiseless.
    double snr_db = std::numeric_limits<double>::infinity();
    double success_tol = 1e-3;
    SolverConfig solver;
    std::uint64_t seed = 0;
};

struct TrialOutcome
{
    double rel_err = std::numeric_limits<double>::infinity();
    bool success = false;
    /// True when the run stopped on a numerical error (ill-conditioned Gram).
    bool numerical_failure = false;
    std::string message;
    Index iterations = 0;
    Termination reason = Termination::MaxIters;
    double seconds = 0.0;
    double sigma = 0.0;
    RunTrace trace;
};

/// Generate a model, sample, add noise, run the solver and score the result.
TrialOutcome run_recovery_trial(const RecoveryTrial& spec);

/// Many trials of the same configuration with seeds derived from `spec.seed`.
std::vector<TrialOutcome> run_trials(const RecoveryTrial& spec, Index trials, Index threads = 0);

/// Number of samples for an observation ratio: `round(p s n)`, at least 1.
Index samples_for_ratio(double p, Index n, Index s);

/// `floor(c s r ln n)`, the sample budget of the runtime sweeps.
Index samples_for_runtime(double c, Index n, Index s, Index r);

///
/// Phase transition over (s, m): one row per grid cell with the success rate.
///
Table run_phase_transition(const RecoveryTrial& base, const std::vector<Index>& s_list,
                           const std::vector<Index>& m_list, Index trials, Index threads = 0);

///
/// Smallest m on the (ascending) grid whose success rate reaches `level`,
/// scanning upward and stopping at the first hit; -1 if none does.
///
Index success_frontier(const RecoveryTrial& base, const std::vector<Index>& m_grid,
                       Index trials, double level, Index threads = 0,
                       Table* cells = nullptr);

/// Success rate versus observation ratio p.
Table run_success_curve(const RecoveryTrial& base, const std::vector<double>& p_list,
                        Index trials, Index threads = 0);

struct ConvergenceReport
{
    /// Rows: p, threshold, mean iterations, mean seconds, trials reaching it.
    Table thresholds;
    /// Rows: p, iteration, mean rel-err, mean loss, mean seconds, trials alive.
    Table trace;
};

/// Iterations to each error threshold, averaged over trials.
ConvergenceReport run_convergence(const RecoveryTrial& base, const std::vector<double>& p_list,
                                  const std::vector<double>& thresholds, Index trials,
                                  Index threads = 0);

/// Median wall time of one gradient evaluation on random factors.
double median_gradient_seconds(Index n, Index s, Index r, Index m, Index reps,
                               std::uint64_t seed);

/// Runtime sweep over (n, s) pairs with `m = floor(c s r ln n)`.
Table run_runtime(const RecoveryTrial& base, const std::vector<std::pair<Index, Index>>& dims,
                  double c, Index trials, Index grad_reps = 5, Index threads = 0);

/// Final relative error versus SNR.
Table run_noise_sweep(const RecoveryTrial& base, const std::vector<double>& snr_list,
                      Index trials, Index threads = 0);

/// Least-squares slope and coefficient of determination of y against x.
struct LineFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

///
/// ### SLAConfig
///
/// Sparse linear array: a uniform n-element array of which only `sensors`
/// exist, observed over `s` snapshots with a random fraction `dropout` of the
/// sensor/snapshot entries missing.
///
struct SLAConfig
{
    Index n = 64;
    std::vector<Index> sensors{2, 4, 6, 10, 20, 21, 23, 30, 33, 38, 39, 40, 49, 50, 51, 56, 62};
    Index s = 32;
    std::vector<double> angles_deg{1.0, 2.0, 4.0, 6.0};
    double dropout = 0.1;
    double snr_db = 40.0;
    double music_step_deg = 0.01;

    void validate() const;
};

struct DoaOutcome
{
    std::vector<double> estimates_deg;
    bool failed = false; ///< fewer peaks than sources, or solver failure
    std::string message;
    double squared_error = 0.0; ///< sum over sources, degrees^2
    double completion_rel_err = 0.0;
};

/// One DOA trial: synthesize, mask, complete, run MUSIC.
DoaOutcome run_doa_trial(const SLAConfig& sla, const SolverConfig& solver, std::uint64_t seed);

struct DoaSummary
{
    double rmse_deg = 0.0; ///< over non-failed trials
    Index failed = 0;
    std::vector<DoaOutcome> trials;
};

DoaSummary run_doa(const SLAConfig& sla, const SolverConfig& solver, Index trials,
                   std::uint64_t seed, Index threads = 0);

} // namespace scalht

#endif /* SCALHT_EXPERIMENTS_HPP */
