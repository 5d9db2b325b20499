// l96x -- command-line pipeline around the two-layer model and its reduced
// stochastic surrogates: generate -> fit -> simulate -> diagnose -> compare.
//
// Exit codes: 0 ok, 1 assertion failure (compare --assert), 2 usage or
// configuration error, 3 divergence, 4 estimation/data error.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "l96/config.hpp"
#include "l96/diagnostics.hpp"
#include "l96/errors.hpp"
#include "l96/estimation.hpp"
#include "l96/full_model.hpp"
#include "l96/narmax.hpp"
#include "l96/noise.hpp"
#include "l96/reduced_model.hpp"
#include "l96/series_io.hpp"
#include "l96/varx.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace l96;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssert = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitData = 4;

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open JSON file: " + path);
    json j;
    in >> j;
    return j;
}

void write_json_file(const std::string& path, const json& j) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

json config_to_json(const ModelConfig& cfg) {
    return json{{"epsilon", cfg.epsilon},
                {"K", cfg.K},
                {"J", cfg.J},
                {"F", cfg.F},
                {"h_x", cfg.h_x},
                {"h_y", cfg.h_y},
                {"dt_full", cfg.dt_full},
                {"dt_reduced", cfg.dt_reduced},
                {"sample_interval", cfg.sample_interval},
                {"n_samples", cfg.n_samples},
                {"burn_in", cfg.burn_in}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.K = j.at("K").get<int>();
    cfg.J = j.at("J").get<int>();
    cfg.F = j.at("F").get<double>();
    cfg.h_x = j.at("h_x").get<double>();
    cfg.h_y = j.at("h_y").get<double>();
    cfg.dt_full = j.at("dt_full").get<double>();
    cfg.dt_reduced = j.at("dt_reduced").get<double>();
    cfg.sample_interval = j.at("sample_interval").get<double>();
    cfg.n_samples = j.at("n_samples").get<std::int64_t>();
    cfg.burn_in = j.at("burn_in").get<double>();
    return cfg;
}

std::string hash_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct ConfigArgs {
    std::string preset;
    std::string config_file;
    std::vector<std::string> overrides;  // key=value

    void attach(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "named configuration (unimodal|trimodal)");
        cmd->add_option("--config", config_file, "key=value configuration file");
        cmd->add_option("--set", overrides, "override one configuration field (key=value)");
    }

    bool any() const { return !preset.empty() || !config_file.empty(); }

    /// Resolves to a config; returns the preset's recommended order (0 when
    /// the configuration is fully custom).
    ModelConfig resolve(int* order_out) const {
        ModelConfig cfg;
        int order = 0;
        if (!config_file.empty()) {
            cfg = parse_config_file(config_file);
        } else if (!preset.empty()) {
            const auto p = find_preset(preset);
            if (!p) throw ConfigError("unknown preset '" + preset + "'");
            cfg = p->config;
            order = p->recommended_order;
        } else {
            throw ConfigError("no configuration given: use --preset or --config");
        }
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
            apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (order_out) *order_out = order;
        return cfg;
    }
};

void ensure_parent(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    ConfigArgs config;
    std::uint64_t seed = 1;
    int scale = 1;
    std::string output;
    std::string csv;
};

int run_generate(const GenerateArgs& args) {
    int order = 0;
    ModelConfig cfg = args.config.resolve(&order);
    cfg.n_samples = scaled_samples(cfg.n_samples, order, args.scale);
    cfg.validate();

    const auto t0 = std::chrono::steady_clock::now();
    SampleSeries series = simulate_full(cfg, args.seed);
    const double wall = elapsed_seconds(t0);

    ensure_parent(args.output);
    write_series(args.output, series);
    if (!args.csv.empty()) {
        ensure_parent(args.csv);
        export_csv(args.csv, series.X, series.B);
    }

    json sidecar{{"schema", "l96x-series/1"},
                 {"command", "generate"},
                 {"config", config_to_json(cfg)},
                 {"config_hash", hash_hex(series.config_hash)},
                 {"seed", args.seed},
                 {"scale", args.scale},
                 {"rng", RandomSource::algorithm_name()},
                 {"wall_time_s", wall},
                 {"divergence", nullptr}};
    write_json_file(args.output + ".json", sidecar);

    std::cout << "wrote " << args.output << " (N=" << series.rows() << ", K=" << series.cols()
              << ") in " << wall << " s\n";
    return kExitOk;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
    std::string series_path;
    std::string kind;  // wn | ar1 | wnd | varx | narmax
    int p = -1;
    std::string cov = "diag";
    bool full_lags = false;
    std::string variant = "1201";
    bool preset_params = false;
    std::string output;
    int order_stats = 40;
    ConfigArgs config;  // narmax needs F; default comes from the series sidecar
};

ModelConfig config_for_series(const ConfigArgs& explicit_cfg, const std::string& series_path) {
    if (explicit_cfg.any()) return explicit_cfg.resolve(nullptr);
    const std::string sidecar = series_path + ".json";
    if (!fs::exists(sidecar)) {
        throw ConfigError("no configuration available: expected sidecar " + sidecar +
                          " or an explicit --preset/--config");
    }
    return config_from_json(read_json_file(sidecar).at("config"));
}

int run_fit(const FitArgs& args) {
    const SampleSeries series = read_series(args.series_path);
    const int K = series.cols();

    json out;
    bool unstable = false;

    if (args.kind == "narmax") {
        const NarmaxVariant variant = narmax_variant_from_string(args.variant);
        ModelConfig cfg = config_for_series(args.config, args.series_path);
        if (cfg.K != K) throw DataError("series K does not match configuration K");
        NarmaxModel model;
        if (args.preset_params) {
            model = narmax_preset(variant);
        } else {
            model = fit_narmax(series, variant, cfg);
        }
        unstable = std::abs(model.a1) >= 1.0;
        out = model;
        out["params_source"] = args.preset_params ? "preset" : "fit";
        out["training_hash"] = args.preset_params ? 0 : series.config_hash;
        out["fit"] = json{{"rows", (series.rows() - 2) * K}};
    } else {
        if (args.preset_params) throw ConfigError("--preset-params applies to narmax only");
        VarxSpec spec;
        if (args.kind == "wn") {
            spec = VarxSpec::wn(K);
        } else if (args.kind == "ar1") {
            spec = VarxSpec::multi_ar1(K);
        } else if (args.kind == "wnd") {
            spec = VarxSpec::wnd(K);
        } else if (args.kind == "varx") {
            if (args.p < 1) throw ConfigError("varx requires --p >= 1");
            spec = VarxSpec::varx(K, args.p, covariance_kind_from_string(args.cov));
        } else {
            throw ConfigError("unknown model kind '" + args.kind +
                              "' (expected wn|ar1|wnd|varx|narmax)");
        }
        if (args.kind != "varx") {
            if (args.p >= 0) throw ConfigError("--p applies to kind 'varx' only");
            if (args.cov != "diag") throw ConfigError("--cov applies to kind 'varx' only");
        }
        spec.all_lags = args.full_lags;

        FitInfo info;
        VarxModel model = fit_parameterization(series, spec, &info);
        unstable = spec.use_endogenous && !model.stability.stable;
        out = model;
        out["fit"] = json{{"rows", info.rows},
                          {"residual_mean", info.residual_mean},
                          {"residual_std", info.residual_std},
                          {"stability_moduli_max", model.stability.max_modulus()}};
    }

    if (args.order_stats > 0 && series.rows() > args.order_stats + 2) {
        out["fit"]["order_selection"] =
            json{{"max_lag", args.order_stats},
                 {"acf_b", acf(series.B, args.order_stats)},
                 {"pacf_b", pacf(series.B, args.order_stats)}};
    }

    write_json_file(args.output, out);
    if (unstable) {
        std::cerr << "WARNING: fitted model violates the stationarity constraint "
                     "(companion spectral radius >= 1); simulations may diverge\n";
    }
    std::cout << "wrote " << args.output << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string model_path;  // model JSON or the literal "zero"
    std::string ref_path;
    std::uint64_t seed = 1;
    std::int64_t steps = -1;
    std::string output;
    int ensemble = 1;
    bool zero_history = false;
    ConfigArgs config;
};

Parameterization load_parameterization(const std::string& path) {
    if (path == "zero") return ZeroParameterization{};
    const json j = read_json_file(path);
    const std::string kind = j.value("kind", "");
    if (kind == "varx") {
        VarxModel m = j;
        return m;
    }
    if (kind == "narmax") {
        NarmaxModel m = j;
        return m;
    }
    if (kind == "zero") return ZeroParameterization{};
    throw DataError("unknown model kind '" + kind + "' in " + path);
}

int worker_count(int tasks) {
    int cap = static_cast<int>(std::thread::hardware_concurrency());
    if (cap <= 0) cap = 1;
    if (const char* env = std::getenv("L96_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) cap = std::min(cap, v);
    }
    return std::max(1, std::min(tasks, cap));
}

int run_simulate(const SimulateArgs& args) {
    const Parameterization param = load_parameterization(args.model_path);

    ModelConfig cfg;
    if (args.config.any()) {
        cfg = args.config.resolve(nullptr);
    } else if (!args.ref_path.empty()) {
        cfg = config_for_series(args.config, args.ref_path);
    } else {
        throw ConfigError("no configuration: give --ref (with sidecar) or --preset/--config");
    }
    cfg.validate();

    std::int64_t steps = args.steps;
    WarmStart init;
    if (args.zero_history) {
        // Documented deviation from the reference-data warm start: seed the
        // initial state randomly (an exactly uniform state would never leave
        // the uniform subspace under the zero parameterization) and use a
        // zero b history.
        const int rows = min_init_rows(param);
        RandomSource init_rng(args.seed ^ 0x9e3779b97f4a7c15ull);
        Eigen::VectorXd x0(cfg.K);
        for (int k = 0; k < cfg.K; ++k) x0[k] = init_rng.uniform(-1.0, 1.0) * cfg.F / 10.0;
        init.x_rows = x0.transpose().replicate(rows, 1);
        init.b_rows = Eigen::MatrixXd::Zero(rows, cfg.K);
        if (steps < 0) throw ConfigError("--steps is required with --zero-history");
    } else {
        if (args.ref_path.empty()) {
            throw ConfigError("a reference series (--ref) is required to warm-start; "
                              "use --zero-history to opt out");
        }
        const SampleSeries ref = read_series(args.ref_path);
        if (ref.cols() != cfg.K) throw DataError("reference series K does not match configuration");
        init = warm_start_from_series(ref, min_init_rows(param));
        if (steps < 0) steps = ref.rows();
    }

    if (parameterization_unstable(param)) {
        std::cerr << "WARNING: simulating a model flagged unstable\n";
    }

    struct Member {
        std::uint64_t seed;
        std::string path;
    };
    std::vector<Member> members;
    if (args.ensemble <= 1) {
        members.push_back({args.seed, args.output});
    } else {
        const fs::path out(args.output);
        const std::string stem = (out.parent_path() / out.stem()).string();
        const std::string ext = out.extension().string();
        for (int m = 0; m < args.ensemble; ++m) {
            const std::uint64_t s = args.seed + static_cast<std::uint64_t>(m);
            members.push_back({s, stem + "_seed" + std::to_string(s) + ext});
        }
    }

    std::atomic<std::size_t> next{0};
    std::mutex io_mutex;
    std::vector<std::string> failures;
    const auto t0 = std::chrono::steady_clock::now();

    auto work = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= members.size()) return;
            const auto& member = members[idx];
            try {
                ReducedTrajectory traj = simulate_reduced(cfg, param, init, member.seed, steps);
                BlockFile file;
                file.magic = kTrajectoryMagic;
                file.X = std::move(traj.Xtilde);
                file.B = std::move(traj.Btilde);
                file.sample_interval = cfg.dt_reduced;
                file.config_hash = cfg.hash();
                ensure_parent(member.path);
                write_blocks(member.path, file);

                json sidecar{{"schema", "l96x-trajectory/1"},
                             {"command", "simulate"},
                             {"model_id", traj.model_id},
                             {"model_file", args.model_path},
                             {"seed", member.seed},
                             {"steps", steps},
                             {"rng", RandomSource::algorithm_name()},
                             {"stability_warning", traj.stability_warning},
                             {"zero_history", args.zero_history},
                             {"pre_sample_innovations", "zero"},
                             {"config", config_to_json(cfg)},
                             {"config_hash", hash_hex(cfg.hash())},
                             {"wall_time_s", elapsed_seconds(t0)}};
                write_json_file(member.path + ".json", sidecar);
                const std::lock_guard lock(io_mutex);
                std::cout << "wrote " << member.path << " (steps=" << steps
                          << ", seed=" << member.seed << ")\n";
            } catch (const std::exception& e) {
                const std::lock_guard lock(io_mutex);
                failures.emplace_back(e.what());
            }
        }
    };

    const int workers = worker_count(static_cast<int>(members.size()));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    if (!failures.empty()) {
        for (const auto& f : failures) std::cerr << "error: " << f << "\n";
        const bool diverged = std::any_of(failures.begin(), failures.end(), [](const auto& f) {
            return f.find("diverged") != std::string::npos;
        });
        return diverged ? kExitDivergence : kExitData;
    }
    return kExitOk;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseArgs {
    std::string data_path;
    std::string outdir;
    int bins = 100;
    int max_lag = 1000;
    int pacf_lag = 0;
    std::string field = "x";
    std::string match_report;
    int cpdf_bins = 0;
};

int run_diagnose(const DiagnoseArgs& args) {
    const BlockFile file = read_blocks(args.data_path);
    const Eigen::MatrixXd& data = args.field == "b" ? file.B : file.X;
    if (args.field != "x" && args.field != "b") {
        throw ConfigError("--field must be x or b");
    }

    ReportOptions options;
    options.bins = args.bins;
    options.max_lag = args.max_lag;
    if (!args.match_report.empty()) {
        DiagnosticsReport ref = read_json_file(args.match_report);
        options.bins = ref.pdf.bins();
        options.range = std::make_pair(ref.pdf.edges.front(), ref.pdf.edges.back());
        options.max_lag = ref.max_lag;
    }

    DiagnosticsReport report = build_report(data, options);
    if (args.pacf_lag > 0) report.pacf = pacf(data, args.pacf_lag);

    fs::create_directories(args.outdir);
    write_json_file((fs::path(args.outdir) / "report.json").string(), report);
    write_report_csvs(report, args.outdir);

    if (args.cpdf_bins > 0) {
        std::vector<double> x_edges(static_cast<std::size_t>(args.cpdf_bins) + 1);
        const double lo = file.X.minCoeff();
        const double hi = file.X.maxCoeff();
        for (int i = 0; i <= args.cpdf_bins; ++i) {
            x_edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / args.cpdf_bins;
        }
        const ConditionalPdf cpdf = conditional_pdf(file.X, file.B, x_edges, 100);
        std::ofstream out(fs::path(args.outdir) / "cpdf.csv");
        out << "x_center,b_center,density\n";
        for (std::size_t ix = 0; ix < cpdf.densities.size(); ++ix) {
            if (!cpdf.present[ix]) continue;
            const double xc = 0.5 * (cpdf.x_edges[ix] + cpdf.x_edges[ix + 1]);
            for (std::size_t ib = 0; ib + 1 < cpdf.b_edges.size(); ++ib) {
                const double bc = 0.5 * (cpdf.b_edges[ib] + cpdf.b_edges[ib + 1]);
                out << xc << "," << bc << "," << cpdf.densities[ix][ib] << "\n";
            }
        }
        std::ofstream mean_out(fs::path(args.outdir) / "cpdf_mean.csv");
        mean_out << "x_center,mean_b\n";
        for (std::size_t ix = 0; ix < cpdf.densities.size(); ++ix) {
            if (!cpdf.present[ix]) continue;
            const double xc = 0.5 * (cpdf.x_edges[ix] + cpdf.x_edges[ix + 1]);
            mean_out << xc << "," << cpdf.conditional_mean[ix] << "\n";
        }
    }

    std::cout << "wrote report to " << args.outdir << " (mean=" << report.mean
              << ", std=" << report.stddev << ", modes=" << count_modes(report.pdf) << ")\n";
    return kExitOk;
}

// ----------------------------------------------------------------- compare

struct CompareArgs {
    std::string ref_path;
    std::string test_path;
    std::string output;
    std::string assert_path;
};

int run_compare(const CompareArgs& args) {
    const DiagnosticsReport ref = read_json_file(args.ref_path);
    const DiagnosticsReport test = read_json_file(args.test_path);

    CompareSummary summary;
    try {
        summary = compare_reports(ref, test);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;  // grid mismatch is a usage problem
    }

    const json j = summary;
    std::cout << j.dump(2) << "\n";
    if (!args.output.empty()) write_json_file(args.output, j);

    if (args.assert_path.empty()) return kExitOk;

    const json thresholds = read_json_file(args.assert_path);
    int violations = 0;
    auto check_max = [&](const char* key, double value) {
        if (!thresholds.contains(key)) return;
        const double limit = thresholds.at(key).get<double>();
        const bool ok = value <= limit;
        std::cout << (ok ? "PASS " : "FAIL ") << key << ": " << value
                  << (ok ? " <= " : " > ") << limit << "\n";
        if (!ok) ++violations;
    };
    static const std::vector<std::string> known{
        "pdf_l1_max",      "acf_max_dev_max",      "ccf_max_dev_max",
        "mean_rel_err_max", "std_rel_err_max",      "wave_mean_rel_err_max",
        "wave_var_rel_err_max", "require_test_modes", "require_modes_match"};
    for (const auto& [key, value] : thresholds.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("unknown threshold key '" + key + "'");
        }
    }

    check_max("pdf_l1_max", summary.pdf_l1);
    check_max("acf_max_dev_max", summary.acf_max_dev);
    check_max("ccf_max_dev_max", summary.ccf_max_dev);
    check_max("mean_rel_err_max", summary.mean_rel_err);
    check_max("std_rel_err_max", summary.std_rel_err);
    // wave thresholds apply over wavenumbers m >= 1 (m = 0 is the DC level)
    auto tail_max = [](const std::vector<double>& v) {
        double m = 0.0;
        for (std::size_t i = 1; i < v.size(); ++i) m = std::max(m, v[i]);
        return m;
    };
    check_max("wave_mean_rel_err_max", tail_max(summary.wave_mean_rel_err));
    check_max("wave_var_rel_err_max", tail_max(summary.wave_var_rel_err));
    if (thresholds.contains("require_test_modes")) {
        const int want = thresholds.at("require_test_modes").get<int>();
        const bool ok = summary.test_modes == want;
        std::cout << (ok ? "PASS" : "FAIL") << " require_test_modes: " << summary.test_modes
                  << (ok ? " == " : " != ") << want << "\n";
        if (!ok) ++violations;
    }
    if (thresholds.value("require_modes_match", false)) {
        const bool ok = summary.test_modes == summary.ref_modes;
        std::cout << (ok ? "PASS" : "FAIL") << " require_modes_match: " << summary.test_modes
                  << " vs " << summary.ref_modes << "\n";
        if (!ok) ++violations;
    }
    return violations == 0 ? kExitOk : kExitAssert;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-layer L96 reference simulations and reduced stochastic surrogates"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* cmd_generate = app.add_subcommand("generate", "integrate the full model into a training series");
    gen.config.attach(cmd_generate);
    cmd_generate->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
    cmd_generate->add_option("--scale", gen.scale, "divide the sample count for desk-scale runs")
        ->capture_default_str();
    cmd_generate->add_option("-o,--output", gen.output, "output series file")->required();
    cmd_generate->add_option("--csv", gen.csv, "also export a lossless CSV");

    FitArgs fit;
    auto* cmd_fit = app.add_subcommand("fit", "estimate a parameterization from a series");
    cmd_fit->add_option("series", fit.series_path, "training series file")->required();
    cmd_fit->add_option("kind", fit.kind, "wn | ar1 | wnd | varx | narmax")->required();
    cmd_fit->add_option("--p", fit.p, "lag order (varx)");
    cmd_fit->add_option("--cov", fit.cov, "noise root: diag | dense (varx)")->capture_default_str();
    cmd_fit->add_flag("--full-lags", fit.full_lags, "regress on every lag 1..p instead of lag p only");
    cmd_fit->add_option("--variant", fit.variant, "narmax structure: 1201 | 1110")
        ->capture_default_str();
    cmd_fit->add_flag("--preset-params", fit.preset_params, "use the shipped narmax coefficients");
    cmd_fit->add_option("-o,--output", fit.output, "output model JSON")->required();
    cmd_fit->add_option("--order-stats", fit.order_stats,
                        "lags of feedback ACF/PACF to include in the fit report (0 = none)")
        ->capture_default_str();
    fit.config.attach(cmd_fit);

    SimulateArgs sim;
    auto* cmd_simulate = app.add_subcommand("simulate", "run the reduced stochastic model");
    cmd_simulate->add_option("model", sim.model_path, "model JSON, or 'zero' for b = 0")->required();
    cmd_simulate->add_option("--ref", sim.ref_path, "reference series for the warm start");
    cmd_simulate->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
    cmd_simulate->add_option("--steps", sim.steps, "step count (default: reference length)");
    cmd_simulate->add_option("-o,--output", sim.output, "output trajectory file")->required();
    cmd_simulate->add_option("--ensemble", sim.ensemble, "run this many seeds in parallel")
        ->capture_default_str();
    cmd_simulate->add_flag("--zero-history", sim.zero_history,
                           "start from a random state with zero history instead of reference data");
    sim.config.attach(cmd_simulate);

    DiagnoseArgs diag;
    auto* cmd_diagnose = app.add_subcommand("diagnose", "compute the statistical criteria of a run");
    cmd_diagnose->add_option("data", diag.data_path, "series or trajectory file")->required();
    cmd_diagnose->add_option("-o,--outdir", diag.outdir, "report output directory")->required();
    cmd_diagnose->add_option("--bins", diag.bins, "PDF bins")->capture_default_str();
    cmd_diagnose->add_option("--max-lag", diag.max_lag, "ACF/CCF maximum lag")->capture_default_str();
    cmd_diagnose->add_option("--pacf", diag.pacf_lag, "include PACF up to this lag");
    cmd_diagnose->add_option("--field", diag.field, "which block to diagnose: x | b")
        ->capture_default_str();
    cmd_diagnose->add_option("--match", diag.match_report,
                             "reuse binning/lag grids from this reference report.json");
    cmd_diagnose->add_option("--cpdf", diag.cpdf_bins, "emit conditional P(b|x) over this many x bins");

    CompareArgs cmp;
    auto* cmd_compare = app.add_subcommand("compare", "distances between two reports");
    cmd_compare->add_option("ref", cmp.ref_path, "reference report.json")->required();
    cmd_compare->add_option("test", cmp.test_path, "test report.json")->required();
    cmd_compare->add_option("-o,--output", cmp.output, "write the comparison JSON here");
    cmd_compare->add_option("--assert", cmp.assert_path,
                            "thresholds JSON; exit 1 when any threshold is violated");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (cmd_generate->parsed()) return run_generate(gen);
        if (cmd_fit->parsed()) return run_fit(fit);
        if (cmd_simulate->parsed()) return run_simulate(sim);
        if (cmd_diagnose->parsed()) return run_diagnose(diag);
        if (cmd_compare->parsed()) return run_compare(cmp);
        std::cerr << "no subcommand given\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
