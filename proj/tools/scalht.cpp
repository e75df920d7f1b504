///
/// \file scalht.cpp
///
/// Command-line driver for the experiment suite. Each subcommand writes a CSV
/// table plus a `<out>.json` sidecar with the resolved configuration.
///
/// Exit codes: 0 success, 2 configuration error, 3 numerical failure.
///
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <scalht/experiments.hpp>

#ifndef SCALHT_GIT_DESCRIBE
#define SCALHT_GIT_DESCRIBE "unknown"
#endif

using namespace scalht;
using nlohmann::json;

namespace
{

constexpr int kSchemaVersion = 1;

/// Every knob any subcommand accepts; each subcommand registers a subset.
struct Params
{
    std::string config;
    std::string out;
    std::vector<Index> n{63};
    std::vector<Index> s{32};
    Index r = 2;
    std::vector<Index> m;
    std::vector<double> p;
    double eta = 0.25;
    Index trials = 10;
    std::uint64_t seed = 1;
    Index split_k = 0;
    std::string projection = "off";
    Index max_iters = 500;
    double tol_core = 1e-7;
    double success_tol = 1e-3;
    double damping = 0.0;
    std::vector<double> snr;
    std::vector<double> thresholds{1e-2, 1e-4, 1e-6, 1e-8};
    double c = 2.1;
    Index grad_reps = 5;
    Index threads = 0;
    // DOA
    std::vector<Index> sensors = SLAConfig{}.sensors;
    std::vector<double> angles = SLAConfig{}.angles_deg;
    double dropout = 0.1;
    double music_step = 0.01;
};

ProjectionConfig parse_projection(const std::string& text)
{
    ProjectionConfig pc;
    if (text == "off")
        pc.mode = ProjectionMode::Disabled;
    else if (text == "auto")
        pc.mode = ProjectionMode::Auto;
    else
    {
        std::size_t used = 0;
        double radius = 0.0;
        try
        {
            radius = std::stod(text, &used);
        }
        catch (const std::exception&)
        {
            used = 0;
        }
        if (used != text.size() || !(radius > 0.0))
            throw ConfigError("--projection must be off, auto or a positive radius");
        pc.mode   = ProjectionMode::Radius;
        pc.radius = radius;
    }
    return pc;
}

SolverConfig solver_config(const Params& prm)
{
    SolverConfig cfg;
    cfg.r          = prm.r;
    cfg.eta        = prm.eta;
    cfg.max_iters  = prm.max_iters;
    cfg.tol_core   = prm.tol_core;
    cfg.split_K    = prm.split_k;
    cfg.seed       = prm.seed;
    cfg.projection = parse_projection(prm.projection);
    cfg.validate();
    return cfg;
}

RecoveryTrial base_trial(const Params& prm)
{
    detail::require_config(prm.trials >= 1, "--trials must be at least 1");
    detail::require_config(!prm.n.empty() && !prm.s.empty(), "--n and --s must be nonempty");
    RecoveryTrial t;
    t.n           = prm.n.front();
    t.s           = prm.s.front();
    t.r           = prm.r;
    t.damping     = prm.damping;
    t.success_tol = prm.success_tol;
    t.solver      = solver_config(prm);
    t.seed        = prm.seed;
    return t;
}

/// Sample count from `--m` or `--p` (exactly one single value).
Index single_budget(const Params& prm, Index n, Index s)
{
    detail::require_config(prm.m.size() + prm.p.size() == 1,
                           "give exactly one value of --m or --p");
    return prm.m.empty() ? samples_for_ratio(prm.p.front(), n, s) : prm.m.front();
}

json to_json(const Params& prm)
{
    return json{{"out", prm.out},
                {"n", prm.n},
                {"s", prm.s},
                {"r", prm.r},
                {"m", prm.m},
                {"p", prm.p},
                {"eta", prm.eta},
                {"trials", prm.trials},
                {"seed", prm.seed},
                {"split-k", prm.split_k},
                {"projection", prm.projection},
                {"max-iters", prm.max_iters},
                {"tol-core", prm.tol_core},
                {"success-tol", prm.success_tol},
                {"damping", prm.damping},
                {"snr", prm.snr},
                {"thresholds", prm.thresholds},
                {"c", prm.c},
                {"grad-reps", prm.grad_reps},
                {"threads", prm.threads},
                {"sensors", prm.sensors},
                {"angles", prm.angles},
                {"dropout", prm.dropout},
                {"music-step", prm.music_step}};
}

void write_outputs(const std::string& command, const Params& prm, const Table& table,
                   const json& extra = json::object())
{
    table.write_csv(prm.out);
    json side{{"command", command},
              {"schema_version", kSchemaVersion},
              {"git_describe", SCALHT_GIT_DESCRIBE},
              {"columns", table.columns},
              {"config", to_json(prm)}};
    side.update(extra);
    std::ofstream js(prm.out + ".json");
    if (!js)
        throw ConfigError("cannot open output file " + prm.out + ".json");
    js << side.dump(2) << "\n";
    std::cout << table.to_csv();
}

/// Fill options that were not given on the command line from a JSON object
/// whose keys are the long flag names without dashes.
void apply_config_file(CLI::App& sub, const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    json doc;
    try
    {
        doc = json::parse(in);
    }
    catch (const json::exception& e)
    {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
    if (!doc.is_object())
        throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : doc.items())
    {
        CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (!opt || key == "config")
            throw ConfigError("unknown config key '" + key + "' for " + sub.get_name());
        if (opt->count() > 0)
            continue;
        std::vector<std::string> words;
        auto word = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
        if (value.is_array())
            for (const auto& v : value)
                words.push_back(word(v));
        else
            words.push_back(word(value));
        try
        {
            opt->add_result(words);
            opt->run_callback();
        }
        catch (const CLI::Error& e)
        {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
    }
}

void add_common(CLI::App* sub, Params& prm, const std::string& default_out)
{
    prm.out = default_out;
    sub->add_option("--config", prm.config, "JSON file of option values (flags take precedence)");
    sub->add_option("--out", prm.out, "output CSV path; the sidecar is <out>.json");
    sub->add_option("--r", prm.r, "spectral sparsity (rank)");
    sub->add_option("--eta", prm.eta, "step size");
    sub->add_option("--trials", prm.trials, "trials per grid point");
    sub->add_option("--seed", prm.seed, "base seed");
    sub->add_option("--split-k", prm.split_k, "number of disjoint sample splits (0 = off)");
    sub->add_option("--projection", prm.projection, "off, auto or a radius");
    sub->add_option("--max-iters", prm.max_iters, "iteration cap");
    sub->add_option("--tol-core", prm.tol_core, "relative core-change tolerance");
    sub->add_option("--threads", prm.threads, "worker threads (0 = hardware)");
}

void add_recovery(CLI::App* sub, Params& prm)
{
    sub->add_option("--success-tol", prm.success_tol, "relative error counted as success");
    sub->add_option("--damping", prm.damping, "damping factor of the random model");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Scaled gradient descent for low-rank Hankel tensor completion"};
    app.set_version_flag("--version", std::string(SCALHT_GIT_DESCRIBE));
    app.require_subcommand(1);
    Params prm;

    auto* phase = app.add_subcommand("phase", "success rate over an (s, m) grid");
    add_common(phase, prm, "phase.csv");
    add_recovery(phase, prm);
    phase->add_option("--n", prm.n, "signal length")->delimiter(',');
    phase->add_option("--s", prm.s, "snapshot counts")->delimiter(',');
    phase->add_option("--m", prm.m, "sample counts")->delimiter(',');

    auto* curve = app.add_subcommand("curve", "success rate versus observation ratio");
    add_common(curve, prm, "curve.csv");
    add_recovery(curve, prm);
    curve->add_option("--n", prm.n, "signal length")->delimiter(',');
    curve->add_option("--s", prm.s, "snapshots")->delimiter(',');
    curve->add_option("--p", prm.p, "observation ratios")->delimiter(',');

    auto* conv = app.add_subcommand("converge", "iterations to error thresholds");
    add_common(conv, prm, "converge.csv");
    add_recovery(conv, prm);
    conv->add_option("--n", prm.n, "signal length")->delimiter(',');
    conv->add_option("--s", prm.s, "snapshots")->delimiter(',');
    conv->add_option("--p", prm.p, "observation ratios")->delimiter(',');
    conv->add_option("--thresholds", prm.thresholds, "relative error thresholds")->delimiter(',');

    auto* runtime = app.add_subcommand("runtime", "wall time over (n, s) with m = c s r ln n");
    add_common(runtime, prm, "runtime.csv");
    add_recovery(runtime, prm);
    runtime->add_option("--n", prm.n, "signal lengths")->delimiter(',');
    runtime->add_option("--s", prm.s, "snapshot counts")->delimiter(',');
    runtime->add_option("--c", prm.c, "sample budget constant");
    runtime->add_option("--grad-reps", prm.grad_reps, "gradient timing repetitions");

    auto* noise = app.add_subcommand("noise", "final error versus SNR");
    add_common(noise, prm, "noise.csv");
    add_recovery(noise, prm);
    noise->add_option("--n", prm.n, "signal length")->delimiter(',');
    noise->add_option("--s", prm.s, "snapshots")->delimiter(',');
    noise->add_option("--m", prm.m, "sample count")->delimiter(',');
    noise->add_option("--p", prm.p, "observation ratio")->delimiter(',');
    noise->add_option("--snr", prm.snr, "SNR values in dB")->delimiter(',');

    auto* doa = app.add_subcommand("doa", "sparse linear array DOA with MUSIC");
    add_common(doa, prm, "doa.csv");
    doa->add_option("--n", prm.n, "full array size")->delimiter(',');
    doa->add_option("--s", prm.s, "snapshots")->delimiter(',');
    doa->add_option("--snr", prm.snr, "SNR values in dB")->delimiter(',');
    doa->add_option("--sensors", prm.sensors, "sensor indices")->delimiter(',');
    doa->add_option("--angles", prm.angles, "source angles in degrees")->delimiter(',');
    doa->add_option("--dropout", prm.dropout, "fraction of missing entries");
    doa->add_option("--music-step", prm.music_step, "MUSIC grid step in degrees");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    try
    {
        if (!prm.config.empty())
            apply_config_file(*sub, prm.config);

        if (sub == phase)
        {
            // Phase defaults mirror the small-grid experiment.
            if (phase->count("--m") == 0 && prm.m.empty())
                for (Index m = 50; m <= 500; m += 50)
                    prm.m.push_back(m);
            const RecoveryTrial base = base_trial(prm);
            write_outputs("phase", prm,
                          run_phase_transition(base, prm.s, prm.m, prm.trials, prm.threads));
        }
        else if (sub == curve)
        {
            if (prm.p.empty())
                prm.p = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
            const RecoveryTrial base = base_trial(prm);
            write_outputs("curve", prm, run_success_curve(base, prm.p, prm.trials, prm.threads));
        }
        else if (sub == conv)
        {
            if (prm.p.empty())
                prm.p = {0.6};
            const RecoveryTrial base = base_trial(prm);
            const ConvergenceReport rep =
                run_convergence(base, prm.p, prm.thresholds, prm.trials, prm.threads);
            const std::string thr_path = prm.out + ".thresholds.csv";
            rep.thresholds.write_csv(thr_path);
            write_outputs("converge", prm, rep.trace,
                          json{{"threshold_table", thr_path},
                               {"threshold_columns", rep.thresholds.columns}});
            std::cout << rep.thresholds.to_csv();
        }
        else if (sub == runtime)
        {
            std::vector<std::pair<Index, Index>> dims;
            for (Index n : prm.n)
                for (Index s : prm.s)
                    dims.emplace_back(n, s);
            const RecoveryTrial base = base_trial(prm);
            write_outputs("runtime", prm,
                          run_runtime(base, dims, prm.c, prm.trials, prm.grad_reps, prm.threads));
        }
        else if (sub == noise)
        {
            if (prm.snr.empty())
                prm.snr = {20, 30, 40, 50, 60};
            if (prm.m.empty() && prm.p.empty())
                prm.p = {0.6};
            RecoveryTrial base = base_trial(prm);
            base.m = single_budget(prm, base.n, base.s);
            write_outputs("noise", prm, run_noise_sweep(base, prm.snr, prm.trials, prm.threads));
        }
        else if (sub == doa)
        {
            if (doa->count("--n") == 0)
                prm.n = {SLAConfig{}.n};
            if (doa->count("--s") == 0)
                prm.s = {SLAConfig{}.s};
            if (prm.snr.empty())
                prm.snr = {40};
            detail::require_config(prm.trials >= 1, "--trials must be at least 1");
            detail::require_config(prm.n.size() == 1 && prm.s.size() == 1,
                                   "doa takes a single --n and --s");
            SolverConfig cfg = solver_config(prm);
            Table table{{"snr_db", "rmse_deg", "failed", "trials", "mean_completion_rel_err"}, {}};
            for (std::size_t i = 0; i < prm.snr.size(); ++i)
            {
                SLAConfig sla;
                sla.n              = prm.n.front();
                sla.s              = prm.s.front();
                sla.sensors        = prm.sensors;
                sla.angles_deg     = prm.angles;
                sla.dropout        = prm.dropout;
                sla.snr_db         = prm.snr[i];
                sla.music_step_deg = prm.music_step;
                const DoaSummary sum =
                    run_doa(sla, cfg, prm.trials, derive_seed(prm.seed, i), prm.threads);
                double err = 0;
                for (const auto& t : sum.trials)
                    err += t.completion_rel_err;
                table.add({prm.snr[i], sum.rmse_deg, double(sum.failed), double(prm.trials),
                           err / double(prm.trials)});
            }
            write_outputs("doa", prm, table);
        }
    }
    catch (const ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const DimensionError& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const NumericalError& e)
    {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
