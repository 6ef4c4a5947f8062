// farlab: simulate FAR(1) paths, fit and predict with intervals, and run the
// verification suites.
//
// Exit codes: 0 success, 1 check failure, 2 usage or config error, 3 I/O error.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "farlab/error.hpp"
#include "farlab/estimate.hpp"
#include "farlab/io.hpp"
#include "farlab/model.hpp"
#include "farlab/simulate.hpp"
#include "farlab/suites.hpp"

namespace fs = std::filesystem;
using namespace farlab;

namespace {

enum Exit { ok = 0, check_failed = 1, usage = 2, io_failure = 3 };

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string suite;
    std::optional<std::size_t> reps;
    std::optional<std::size_t> n;
    std::optional<double> c;
    std::optional<std::size_t> k;
    std::optional<unsigned> threads;
    std::optional<double> level;
    std::string format = "table";
    std::string path;
};

ExperimentConfig effective_config(const Options& o) {
    ExperimentConfig cfg;
    if (!o.config.empty()) cfg = load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.n) cfg.n = *o.n;
    if (o.reps) cfg.reps = *o.reps;
    if (o.c) {
        if (!(*o.c > 0.0)) throw schema_error("c", "must be > 0");
        cfg.c = *o.c;
    }
    if (o.k) {
        if (*o.k < 1) throw schema_error("k", "must be >= 1");
        cfg.k = *o.k;
    }
    if (o.level) {
        if (!(*o.level >= 0.0) || !(*o.level < 1.0)) throw schema_error("level", "must lie in [0, 1)");
        cfg.level = *o.level;
    }
    if (o.threads) cfg.threads = *o.threads;
    return cfg;
}

std::uint64_t require_seed(const ExperimentConfig& cfg) {
    if (!cfg.seed) throw schema_error("seed", "missing (pass --seed or set \"seed\" in the config)");
    return *cfg.seed;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw io_error("cannot create output directory '" + dir + "'");
}

std::string out_file(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// ---------------------------------------------------------------------------

int cmd_simulate(const Options& o) {
    const ExperimentConfig cfg = effective_config(o);
    const std::uint64_t seed = require_seed(cfg);
    if (!cfg.model) throw schema_error("model", "missing (simulate needs a model)");
    const std::size_t n = cfg.n.value_or(1000);
    if (n < 2) throw schema_error("n", "must be >= 2");
    const FarModel model = FarModel::from_spec(*cfg.model);
    const Path path = simulate_far(model, n, cfg.burn_in, seed);

    const std::string csv = path_csv(path);
    if (!o.out.empty()) {
        ensure_dir(o.out);
        write_file(out_file(o.out, "path.csv"), csv);
    }
    const double tr = empirical_covariance(path.observations).trace();
    if (o.format == "json") {
        json j{{"format", report_format}, {"command", "simulate"},     {"config_hash", hex64(config_hash(cfg))},
               {"n", n},                  {"D", model.dim()},          {"seed", seed},
               {"burn_in", cfg.burn_in},  {"model_hash", hex64(model.hash())}, {"trace_gamma_n", tr}};
        std::cout << j.dump(2) << '\n';
    } else if (o.format == "csv" && o.out.empty()) {
        std::cout << csv;
    } else {
        std::cout << "n=" << n << " D=" << model.dim() << " seed=" << seed << " trace_gamma_n=" << format_double(tr)
                  << '\n';
    }
    return ok;
}

// ---------------------------------------------------------------------------

int cmd_fit(const Options& o) {
    const ExperimentConfig cfg = effective_config(o);
    if (o.path.empty()) throw schema_error("path", "missing (pass --path <csv>)");
    const Path path = load_path_csv(o.path);
    if (path.size() < 3) throw schema_error("path", "need at least 3 observations (fit on all but the last)");

    // Tiled: fit on X₁..X_{N−1}, predict X_{N+1} from the held-out X_N.
    const std::span<const CoeffVector> all(path.observations);
    const Fit f = fit(all.first(all.size() - 1), FitOptions{cfg.k, cfg.c});
    const CoeffVector& x_last = path.observations.back();
    const CoeffVector pred = predict(f, x_last);
    const FitDiagnostics g = diagnose(f);

    json intervals = json::array();
    std::ostringstream csv;
    csv << "direction,center,lo,hi,half_width\n";
    for (std::size_t idx : cfg.directions) {
        if (idx < 1 || idx > f.dim()) throw schema_error("directions", "eigen index outside [1, D]");
        const CoeffVector& u = f.fpca.eigenvector(idx - 1);
        const Interval ci = confidence_interval(f, x_last, u, cfg.level);
        intervals.push_back({{"direction", "ehat" + std::to_string(idx)},
                             {"center", ci.center},
                             {"lo", ci.lo},
                             {"hi", ci.hi},
                             {"half_width", ci.half_width}});
        csv << "ehat" << idx << ',' << format_double(ci.center) << ',' << format_double(ci.lo) << ','
            << format_double(ci.hi) << ',' << format_double(ci.half_width) << '\n';
    }

    json report{{"format", report_format},
                {"command", "fit"},
                {"config_hash", hex64(config_hash(cfg))},
                {"level", cfg.level},
                {"n_fit", f.n},
                {"D", f.dim()},
                {"k_n", f.k_n},
                {"eigenvalues", f.fpca.eigenvalues()},
                {"prediction", pred.coeffs()},
                {"intervals", intervals},
                {"diagnostics", to_json(g)},
                {"fit", to_json(f)}};
    report["fit"]["format"] = fit_format;

    if (!o.out.empty()) {
        ensure_dir(o.out);
        write_file(out_file(o.out, "fit.json"), report.dump(2) + "\n");
        write_file(out_file(o.out, "intervals.csv"), csv.str());
    }
    if (o.format == "json") {
        std::cout << report.dump(2) << '\n';
    } else if (o.format == "csv") {
        std::cout << csv.str();
    } else {
        std::cout << "n_fit=" << f.n << " D=" << f.dim() << " k_n=" << f.k_n
                  << " projector_residual=" << format_double(g.projector_residual) << '\n'
                  << csv.str();
    }
    return ok;
}

// ---------------------------------------------------------------------------

int cmd_verify(const Options& o) {
    const ExperimentConfig cfg = effective_config(o);
    const std::uint64_t seed = require_seed(cfg);
    if (o.suite.empty() || !is_suite(o.suite)) {
        std::string list = "all";
        for (const auto& s : suite_names()) list += ", " + s;
        std::cerr << "farlab verify: " << (o.suite.empty() ? "missing --suite" : "unknown suite '" + o.suite + "'")
                  << "; known suites: " << list << '\n';
        return usage;
    }
    const SuiteParams params = SuiteParams::from_config(cfg, seed);
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = run_suites({o.suite}, params);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const json report = report_json(results, config_hash(cfg), seed);
    if (!o.out.empty()) {
        ensure_dir(o.out);
        write_file(out_file(o.out, "verify_" + o.suite + ".json"), report.dump(2) + "\n");
        for (const auto& s : results)
            for (const auto& [name, content] : s.csv) write_file(out_file(o.out, name), content);
    }
    if (o.format == "json") std::cout << report.dump(2) << '\n';
    else if (o.format == "csv") std::cout << report_csv(results);
    else std::cout << report_table(results);
    std::fprintf(stderr, "farlab verify: %s in %.1f s\n", report["passed"].get<bool>() ? "passed" : "FAILED", secs);
    return report["passed"].get<bool>() ? ok : check_failed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"FAR(1) estimation, prediction and verification lab"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON experiment config or model spec");
        sub->add_option("--seed", o.seed, "master seed (u64)");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--n", o.n, "sample size");
        sub->add_option("--c", o.c, "constant of the k_n rule");
        sub->add_option("--k", o.k, "cutoff override");
        sub->add_option("--reps", o.reps, "Monte Carlo replications");
        sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
        sub->add_option("--format", o.format, "stdout format")->check(CLI::IsMember({"json", "csv", "table"}));
    };
    auto* sim = app.add_subcommand("simulate", "simulate a stationary path to <out>/path.csv");
    common(sim);
    auto* fit_cmd = app.add_subcommand("fit", "fit on a path, predict the next curve with intervals");
    common(fit_cmd);
    fit_cmd->add_option("--path", o.path, "path CSV")->required();
    fit_cmd->add_option("--level", o.level, "interval level (default 0.95)");
    auto* ver = app.add_subcommand("verify", "run verification suites");
    common(ver);
    ver->add_option("--suite", o.suite, "suite name or 'all'")->required();
    ver->add_option("--level", o.level, "interval level (default 0.95)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(o);
        if (fit_cmd->parsed()) return cmd_fit(o);
        if (ver->parsed()) return cmd_verify(o);
    } catch (const io_error& e) {
        std::cerr << "farlab: I/O error: " << e.what() << '\n';
        return io_failure;
    } catch (const schema_error& e) {
        std::cerr << "farlab: config error: " << e.what() << '\n';
        return usage;
    } catch (const parse_error& e) {
        std::cerr << "farlab: parse error: " << e.what() << '\n';
        return usage;
    } catch (const error& e) {
        std::cerr << "farlab: " << e.what() << '\n';
        return usage;
    }
    return usage;
}
