#include <scalht/experiments.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <scalht/gradient.hpp>
#include <scalht/music.hpp>
#include <scalht/signal.hpp>

namespace scalht
{

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream)
{
    // splitmix64 of the combined state
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void parallel_for(Index count, Index threads, const std::function<void(Index)>& body)
{
    if (count <= 0)
        return;
    if (threads <= 0)
        threads = std::max<Index>(1, static_cast<Index>(std::thread::hardware_concurrency()));
    threads = std::min(threads, count);
    if (threads == 1)
    {
        for (Index i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (Index i = next++; i < count; i = next++)
        {
            try
            {
                body(i);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (Index t = 0; t < threads; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

void Table::add(std::vector<double> row)
{
    detail::require(row.size() == columns.size(), "table row width differs from header");
    rows.push_back(std::move(row));
}

std::string Table::to_csv() const
{
    std::ostringstream os;
    for (std::size_t j = 0; j < columns.size(); ++j)
        os << (j ? "," : "") << columns[j];
    os << "\n" << std::setprecision(10);
    for (const auto& row : rows)
    {
        for (std::size_t j = 0; j < row.size(); ++j)
            os << (j ? "," : "") << row[j];
        os << "\n";
    }
    return os.str();
}

void Table::write_csv(const std::string& path) const
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open output file " + path);
    out << to_csv();
}

Index samples_for_ratio(double p, Index n, Index s)
{
    detail::require_config(p > 0.0 && p <= 1.0, "observation ratio must be in (0, 1]");
    return std::max<Index>(1, static_cast<Index>(std::llround(p * double(s * n))));
}

Index samples_for_runtime(double c, Index n, Index s, Index r)
{
    return static_cast<Index>(std::floor(c * double(s) * double(r) * std::log(double(n))));
}

TrialOutcome run_recovery_trial(const RecoveryTrial& spec)
{
    detail::require_config(spec.m >= 1, "number of samples must be at least 1");
    TrialOutcome out;
    const auto t0 = std::chrono::steady_clock::now();
    const HankelSpace space = make_space_for(spec.n, spec.s);
    const SpectralModel model =
        random_model(spec.n, spec.s, spec.r, derive_seed(spec.seed, 1), spec.damping);
    const MatrixXcd x = gen_signal(model);
    MatrixXcd observed = x;
    if (std::isfinite(spec.snr_db))
    {
        out.sigma = sigma_for_snr(x, spec.snr_db);
        observed  = add_noise(x, out.sigma, derive_seed(spec.seed, 2));
    }
    const ObservationSet<cdouble> obs(
        space, sample_observations(space, spec.m, spec.sampling, derive_seed(spec.seed, 3)),
        observed);
    SolverConfig cfg = spec.solver;
    cfg.r    = spec.r;
    cfg.seed = derive_seed(spec.seed, 4);
    try
    {
        SolveResult<cdouble> res = scalht_run(obs, space, cfg, &x);
        out.rel_err    = (res.X_hat - x).norm() / x.norm();
        out.iterations = res.iterations;
        out.reason     = res.reason;
        out.trace      = std::move(res.trace);
        out.success    = std::isfinite(out.rel_err) && out.rel_err <= spec.success_tol;
    }
    catch (const NumericalError& e)
    {
        out.numerical_failure = true;
        out.message           = e.what();
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::vector<TrialOutcome> run_trials(const RecoveryTrial& spec, Index trials, Index threads)
{
    detail::require_config(trials >= 1, "trials must be at least 1");
    std::vector<TrialOutcome> out(static_cast<std::size_t>(trials));
    parallel_for(trials, threads, [&](Index i) {
        RecoveryTrial t = spec;
        t.seed          = derive_seed(spec.seed, 1000 + static_cast<std::uint64_t>(i));
        out[static_cast<std::size_t>(i)] = run_recovery_trial(t);
    });
    return out;
}

namespace
{

Index count_success(const std::vector<TrialOutcome>& v)
{
    return static_cast<Index>(std::count_if(v.begin(), v.end(),
                                            [](const TrialOutcome& o) { return o.success; }));
}

double median(std::vector<double> v)
{
    if (v.empty())
        return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

const std::vector<std::string> kRateColumns{"n", "s", "r", "m", "p", "trials", "successes",
                                            "success_rate", "numerical_failures"};

std::vector<double> rate_row(const RecoveryTrial& t, const std::vector<TrialOutcome>& v)
{
    const Index ok = count_success(v);
    const auto fails = std::count_if(v.begin(), v.end(),
                                     [](const TrialOutcome& o) { return o.numerical_failure; });
    return {double(t.n), double(t.s), double(t.r), double(t.m),
            double(t.m) / double(t.n * t.s), double(v.size()), double(ok),
            double(ok) / double(v.size()), double(fails)};
}

} // namespace

Table run_phase_transition(const RecoveryTrial& base, const std::vector<Index>& s_list,
                           const std::vector<Index>& m_list, Index trials, Index threads)
{
    detail::require_config(!s_list.empty() && !m_list.empty(), "phase grid is empty");
    Table table{kRateColumns, {}};
    for (Index s : s_list)
        for (Index m : m_list)
        {
            RecoveryTrial t = base;
            t.s    = s;
            t.m    = std::min(m, s * t.n);
            t.seed = derive_seed(base.seed, static_cast<std::uint64_t>(s * 100003 + m));
            table.add(rate_row(t, run_trials(t, trials, threads)));
        }
    return table;
}

Index success_frontier(const RecoveryTrial& base, const std::vector<Index>& m_grid, Index trials,
                       double level, Index threads, Table* cells)
{
    if (cells && cells->columns.empty())
        cells->columns = kRateColumns;
    for (Index m : m_grid)
    {
        RecoveryTrial t = base;
        t.m    = std::min(m, t.s * t.n);
        t.seed = derive_seed(base.seed, static_cast<std::uint64_t>(t.s * 100003 + m));
        const auto v = run_trials(t, trials, threads);
        if (cells)
            cells->add(rate_row(t, v));
        if (double(count_success(v)) >= level * double(trials))
            return m;
    }
    return -1;
}

Table run_success_curve(const RecoveryTrial& base, const std::vector<double>& p_list, Index trials,
                        Index threads)
{
    detail::require_config(!p_list.empty(), "observation ratio grid is empty");
    Table table{kRateColumns, {}};
    for (std::size_t i = 0; i < p_list.size(); ++i)
    {
        RecoveryTrial t = base;
        t.m    = samples_for_ratio(p_list[i], t.n, t.s);
        t.seed = derive_seed(base.seed, i);
        table.add(rate_row(t, run_trials(t, trials, threads)));
    }
    return table;
}

ConvergenceReport run_convergence(const RecoveryTrial& base, const std::vector<double>& p_list,
                                  const std::vector<double>& thresholds, Index trials,
                                  Index threads)
{
    detail::require_config(!p_list.empty() && !thresholds.empty(), "convergence grid is empty");
    ConvergenceReport rep;
    rep.thresholds.columns = {"p", "threshold", "mean_iterations", "mean_seconds", "trials_reached",
                              "trials"};
    rep.trace.columns = {"p", "iteration", "mean_rel_err", "mean_loss", "mean_seconds", "trials_alive"};
    const double smallest = *std::min_element(thresholds.begin(), thresholds.end());
    for (std::size_t ip = 0; ip < p_list.size(); ++ip)
    {
        RecoveryTrial t = base;
        t.m                   = samples_for_ratio(p_list[ip], t.n, t.s);
        t.seed                = derive_seed(base.seed, ip);
        t.solver.target_error = smallest;
        const auto v = run_trials(t, trials, threads);
        for (double thr : thresholds)
        {
            double it_sum = 0, sec_sum = 0;
            Index reached = 0;
            for (const auto& o : v)
            {
                for (const auto& rec : o.trace)
                {
                    if (rec.rel_err <= thr)
                    {
                        it_sum += double(rec.iter);
                        sec_sum += rec.seconds;
                        ++reached;
                        break;
                    }
                }
            }
            const double nan = std::numeric_limits<double>::quiet_NaN();
            rep.thresholds.add({p_list[ip], thr, reached ? it_sum / double(reached) : nan,
                                reached ? sec_sum / double(reached) : nan, double(reached),
                                double(v.size())});
        }
        std::size_t longest = 0;
        for (const auto& o : v)
            longest = std::max(longest, o.trace.size());
        for (std::size_t k = 0; k < longest; ++k)
        {
            double e = 0, l = 0, sec = 0;
            Index alive = 0;
            for (const auto& o : v)
            {
                if (k < o.trace.size())
                {
                    e += o.trace[k].rel_err;
                    l += o.trace[k].loss;
                    sec += o.trace[k].seconds;
                    ++alive;
                }
            }
            rep.trace.add({p_list[ip], double(k), e / double(alive), l / double(alive),
                           sec / double(alive), double(alive)});
        }
    }
    return rep;
}

double median_gradient_seconds(Index n, Index s, Index r, Index m, Index reps, std::uint64_t seed)
{
    const HankelSpace space = make_space_for(n, s);
    const MatrixXcd x = gen_signal(random_model(n, s, r, derive_seed(seed, 1)));
    const ObservationSet<cdouble> obs(
        space,
        sample_observations(space, std::min(m, s * space.n()), SamplingMode::WithoutReplacement,
                            derive_seed(seed, 2)),
        x);
    std::mt19937_64 rng(derive_seed(seed, 3));
    std::normal_distribution<double> g(0.0, 1.0);
    auto rnd = [&](Index rows, Index cols) {
        MatrixXcd a(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i)
                a(i, j) = cdouble(g(rng), g(rng));
        return a;
    };
    TuckerFactors<cdouble> f{rnd(space.n1(), r), rnd(space.n2(), r), rnd(s, r),
                             Tensor3cd::FromStorage({r, r, r}, rnd(r * r * r, 1).col(0))};
    std::vector<double> times;
    double sink = 0;
    for (Index i = 0; i < reps + 1; ++i)
    {
        const auto t0 = std::chrono::steady_clock::now();
        const Evaluation<cdouble> ev = evaluate(f, obs, space);
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        sink += ev.loss();
        if (i > 0) // first call warms caches
            times.push_back(dt);
    }
    if (!std::isfinite(sink))
        throw NumericalError("gradient timing produced a non-finite loss");
    return median(times);
}

Table run_runtime(const RecoveryTrial& base, const std::vector<std::pair<Index, Index>>& dims,
                  double c, Index trials, Index grad_reps, Index threads)
{
    detail::require_config(!dims.empty(), "runtime grid is empty");
    Table table{{"n", "s", "r", "m", "trials", "success_rate", "mean_iterations",
                 "median_seconds", "median_grad_seconds"},
                {}};
    for (std::size_t i = 0; i < dims.size(); ++i)
    {
        RecoveryTrial t = base;
        t.n    = dims[i].first;
        t.s    = dims[i].second;
        t.m    = std::min(samples_for_runtime(c, t.n, t.s, t.r), t.n * t.s);
        t.seed = derive_seed(base.seed, i);
        t.solver.target_error = t.success_tol;
        // Sequential trials so that wall times are not skewed by contention.
        const auto v = run_trials(t, trials, 1);
        (void)threads;
        std::vector<double> secs;
        double iters = 0;
        for (const auto& o : v)
        {
            secs.push_back(o.seconds);
            iters += double(o.iterations);
        }
        const double grad = median_gradient_seconds(t.n, t.s, t.r, t.m, grad_reps, t.seed);
        table.add({double(t.n), double(t.s), double(t.r), double(t.m), double(trials),
                   double(count_success(v)) / double(trials), iters / double(trials), median(secs),
                   grad});
    }
    return table;
}

Table run_noise_sweep(const RecoveryTrial& base, const std::vector<double>& snr_list, Index trials,
                      Index threads)
{
    detail::require_config(!snr_list.empty(), "SNR grid is empty");
    Table table{{"snr_db", "mean_sigma", "mean_rel_err", "median_rel_err", "trials",
                 "numerical_failures"},
                {}};
    for (std::size_t i = 0; i < snr_list.size(); ++i)
    {
        RecoveryTrial t = base;
        t.snr_db = snr_list[i];
        t.seed   = derive_seed(base.seed, i);
        const auto v = run_trials(t, trials, threads);
        double sig = 0, err = 0;
        Index fails = 0;
        std::vector<double> errs;
        for (const auto& o : v)
        {
            sig += o.sigma;
            if (o.numerical_failure)
            {
                ++fails;
                continue;
            }
            err += o.rel_err;
            errs.push_back(o.rel_err);
        }
        const double ok = double(v.size() - static_cast<std::size_t>(fails));
        table.add({snr_list[i], sig / double(v.size()), ok > 0 ? err / ok : std::nan(""),
                   median(errs), double(trials), double(fails)});
    }
    return table;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    detail::require(x.size() == y.size() && x.size() >= 2, "fit_line needs two or more points");
    const double n  = double(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    f.slope     = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2        = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

void SLAConfig::validate() const
{
    detail::require_config(n >= 2 && s >= 1, "array size and snapshots must be positive");
    detail::require_config(!sensors.empty(), "sensor set is empty");
    std::vector<Index> sorted = sensors;
    std::sort(sorted.begin(), sorted.end());
    detail::require_config(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
                           "sensor indices must be distinct");
    detail::require_config(sorted.front() >= 0 && sorted.back() < n, "sensor index out of range");
    detail::require_config(!angles_deg.empty(), "no source angles");
    for (double a : angles_deg)
        detail::require_config(a >= -90.0 && a < 90.0, "source angles must be in [-90, 90)");
    detail::require_config(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
}

DoaOutcome run_doa_trial(const SLAConfig& sla, const SolverConfig& solver, std::uint64_t seed)
{
    sla.validate();
    const Index r = static_cast<Index>(sla.angles_deg.size());
    DoaOutcome out;

    // Unit-power sources: each amplitude is standard circular complex Gaussian.
    std::mt19937_64 rng(derive_seed(seed, 1));
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    MatrixXcd amp(sla.s, r);
    for (Index k = 0; k < r; ++k)
        for (Index l = 0; l < sla.s; ++l)
            amp(l, k) = cdouble(g(rng), g(rng));
    Eigen::VectorXcd poles(r);
    for (Index k = 0; k < r; ++k)
        poles[k] = std::polar(1.0, std::numbers::pi *
                                       std::sin(sla.angles_deg[std::size_t(k)] * std::numbers::pi / 180.0));
    const MatrixXcd x = signal_from_poles(poles, amp, sla.n);
    const double sigma = std::sqrt(std::pow(10.0, -sla.snr_db / 10.0));
    const MatrixXcd noisy = add_noise(x, sigma, derive_seed(seed, 2));

    // Sensor/snapshot entries of the sparse array, minus a random dropout.
    std::vector<Cell> cells;
    for (Index l = 0; l < sla.s; ++l)
        for (Index a : sla.sensors)
            cells.push_back({l, a});
    std::mt19937_64 mask_rng(derive_seed(seed, 3));
    std::shuffle(cells.begin(), cells.end(), mask_rng);
    const Index keep = static_cast<Index>(std::llround((1.0 - sla.dropout) * double(cells.size())));
    cells.resize(static_cast<std::size_t>(keep));

    const HankelSpace space = make_space_for(sla.n, sla.s);
    const ObservationSet<cdouble> obs(space, std::move(cells), noisy);
    SolverConfig cfg = solver;
    cfg.r    = r;
    cfg.seed = derive_seed(seed, 4);
    try
    {
        const SolveResult<cdouble> res = scalht_run(obs, space, cfg, &x);
        out.completion_rel_err = (res.X_hat - x).norm() / x.norm();
        MusicOptions mo;
        mo.grid_step_deg  = sla.music_step_deg;
        out.estimates_deg = music_estimate(res.X_hat, r, mo);
    }
    catch (const NumericalError& e)
    {
        out.failed  = true;
        out.message = e.what();
        return out;
    }
    std::vector<double> truth = sla.angles_deg;
    std::sort(truth.begin(), truth.end());
    for (Index k = 0; k < r; ++k)
    {
        const double d = out.estimates_deg[std::size_t(k)] - truth[std::size_t(k)];
        out.squared_error += d * d;
    }
    return out;
}

DoaSummary run_doa(const SLAConfig& sla, const SolverConfig& solver, Index trials,
                   std::uint64_t seed, Index threads)
{
    detail::require_config(trials >= 1, "trials must be at least 1");
    DoaSummary sum;
    sum.trials.resize(static_cast<std::size_t>(trials));
    parallel_for(trials, threads, [&](Index i) {
        sum.trials[std::size_t(i)] = run_doa_trial(sla, solver, derive_seed(seed, 1000 + std::uint64_t(i)));
    });
    double se = 0;
    Index ok = 0;
    for (const auto& t : sum.trials)
    {
        if (t.failed)
        {
            ++sum.failed;
            continue;
        }
        se += t.squared_error;
        ++ok;
    }
    // sqrt of the mean over trials of ||theta_hat - theta||^2 (sum over sources).
    sum.rmse_deg = ok ? std::sqrt(se / double(ok)) : std::numeric_limits<double>::infinity();
    return sum;
}

} // namespace scalht
