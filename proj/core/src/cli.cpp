#include "gpscan/cli.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpscan/experiments.hpp"
#include "gpscan/rng.hpp"

namespace gpscan {

namespace {

void log_info(const std::string& msg) { std::cerr << "gpscan: " << msg << '\n'; }

std::string read_file_or_empty(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string join_argv(int argc, const char* const* argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i) out += ' ';
        out += argv[i];
    }
    return out;
}

// ---- hyperparameter JSON ----

nlohmann::json hp_to_json(const Hyperparams& hp) {
    nlohmann::json j;
    j["lengthscale"] = std::vector<double>(hp.lengthscale.begin(), hp.lengthscale.end());
    j["signal_variance"] = hp.signal_variance;
    j["noise_variance"] = hp.noise_variance;
    j["mean_weights"] = std::vector<double>(hp.mean_weights.begin(), hp.mean_weights.end());
    j["mean_bias"] = hp.mean_bias;
    return j;
}

Hyperparams hp_from_json(const nlohmann::json& j) {
    Hyperparams hp;
    const auto ls = j.at("lengthscale").get<std::vector<double>>();
    const auto mw = j.at("mean_weights").get<std::vector<double>>();
    hp.lengthscale = Eigen::Map<const Eigen::VectorXd>(ls.data(), ls.size());
    hp.signal_variance = j.at("signal_variance").get<double>();
    hp.noise_variance = j.at("noise_variance").get<double>();
    hp.mean_weights = Eigen::Map<const Eigen::VectorXd>(mw.data(), mw.size());
    hp.mean_bias = j.at("mean_bias").get<double>();
    hp.validate();
    return hp;
}

std::vector<Hyperparams> hps_from_file(const std::string& path, std::size_t streams) {
    const nlohmann::json j = nlohmann::json::parse(read_file_or_empty(path));
    std::vector<Hyperparams> out;
    if (j.is_array()) {
        for (const auto& item : j)
            out.push_back(hp_from_json(item.contains("hp") ? item.at("hp") : item));
    } else {
        out.push_back(hp_from_json(j));
    }
    if (out.size() == 1 && streams > 1) out.resize(streams, out.front());
    if (out.size() != streams)
        throw InputError("hyperparameter file has " + std::to_string(out.size()) +
                         " entries for " + std::to_string(streams) + " streams");
    return out;
}

// ---- shared input options ----

struct InputOptions {
    std::string data_path;
    std::string events_path;
    // grid flags for --events
    double cell_size = 0.01;
    std::string cell_unit = "deg";
    std::string bin = "day";
    double bin_days = 1.0;
    bool sqrt_transform = false;
    std::vector<double> bounds;  // latmin,latmax,lonmin,lonmax
    CsvSchema schema;

    void attach(CLI::App* cmd) {
        auto* data = cmd->add_option("--data", data_path, "Pre-aggregated dataset CSV (x1..xD,y[,stream][,truth])");
        auto* events = cmd->add_option("--events", events_path, "Raw event CSV to aggregate onto a grid");
        data->excludes(events);
        cmd->add_option("--cell-size", cell_size, "Grid cell size for --events");
        cmd->add_option("--cell-unit", cell_unit, "Cell size unit: deg or m")
            ->check(CLI::IsMember({"deg", "m"}));
        cmd->add_option("--bin", bin, "Temporal bin: day, week, month or custom")
            ->check(CLI::IsMember({"day", "week", "month", "custom"}));
        cmd->add_option("--bin-days", bin_days, "Bin length in days for --bin custom");
        cmd->add_flag("--sqrt-transform", sqrt_transform, "Square-root transform of counts");
        cmd->add_option("--bounds", bounds, "latmin,latmax,lonmin,lonmax bounding box")
            ->delimiter(',')->expected(4);
        cmd->add_option("--lat-col", schema.lat, "Latitude column name");
        cmd->add_option("--lon-col", schema.lon, "Longitude column name");
        cmd->add_option("--time-col", schema.time, "Timestamp column name");
        cmd->add_option("--stream-col", schema.stream, "Stream column name");
        cmd->add_option("--count-col", schema.count, "Count column name");
    }

    DatasetBundle load() const {
        if (!data_path.empty()) return load_dataset_csv(data_path);
        if (events_path.empty()) throw InputError("provide --data or --events");
        GridSpec spec;
        spec.cell_size = cell_size;
        spec.cell_unit = cell_unit == "m" ? GridSpec::CellUnit::Meters : GridSpec::CellUnit::Degrees;
        if (bin == "day") spec.bin.unit = TemporalBin::Unit::Day;
        else if (bin == "week") spec.bin.unit = TemporalBin::Unit::Week;
        else if (bin == "month") spec.bin.unit = TemporalBin::Unit::Month;
        else {
            spec.bin.unit = TemporalBin::Unit::CustomDays;
            spec.bin.days = bin_days;
        }
        spec.sqrt_transform = sqrt_transform;
        if (!bounds.empty())
            spec.bounds = GeoBounds{bounds[0], bounds[1], bounds[2], bounds[3]};
        const LoadResult loaded = load_events_csv(events_path, schema);
        if (loaded.rows_failed > 0)
            log_info(std::to_string(loaded.rows_failed) + "/" +
                     std::to_string(loaded.rows_total) + " event rows failed to parse");
        DatasetBundle bundle = grid_aggregate(loaded.events, spec);
        if (bundle.dropped_outside > 0)
            log_info(std::to_string(bundle.dropped_outside) + " events outside the bounding box");
        return bundle;
    }
};

SearchMethod method_from_flags(const std::string& name, const std::string& direction,
                               int bm_iters, int cap) {
    SearchMethod m;
    if (name == "beta-max" || name == "independent") m.variant = SearchMethod::Variant::BetaMax;
    else if (name == "grq") m.variant = SearchMethod::Variant::GRQ;
    else if (name == "stepwise") m.variant = SearchMethod::Variant::Stepwise;
    else if (name == "exhaustive") m.variant = SearchMethod::Variant::Exhaustive;
    else throw InputError("unknown method: " + name);
    if (direction == "positive") m.direction = SearchMethod::Direction::Positive;
    else if (direction == "negative") m.direction = SearchMethod::Direction::Negative;
    else if (direction == "both") m.direction = SearchMethod::Direction::Both;
    else throw InputError("unknown direction: " + direction);
    m.max_iters = bm_iters;
    m.exhaustive_cap = cap;
    return m;
}

std::string out_or_stdout(const std::string& out) { return out.empty() ? "/dev/stdout" : out; }

// ---- subcommand state ----

struct FitCmd {
    InputOptions input;
    int restarts = 3;
    int iters = 100;
    std::uint64_t seed = 1;
    std::string out;
};

struct ScanCmd {
    InputOptions input;
    std::string method = "beta-max";
    std::string direction = "both";
    int k = 15;
    int k_max = 15;
    int bm_iters = 10;
    int cap = 25;
    std::string hp_path;
    int restarts = 3;
    int iters = 100;
    int replicates = 100;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    int top = 0;
    bool no_dedup = false;
    std::string format = "json";
    std::string out;
};

struct SynthCmd {
    int grid = 20;
    double factor = 0.0;  // 0 = no injection
    double density = 1.0;
    int inject_k = 15;
    int streams = 1;
    std::string hp_path;
    std::uint64_t seed = 1;
    std::string out;
};

struct BenchCommon {
    int trials = 50;
    int k = 15;
    int k_max = 15;
    int grid = 20;
    int replicates = 100;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    bool no_refit = false;
    std::string out;

    ExperimentConfig config() const {
        ExperimentConfig cfg;
        cfg.grid_side = grid;
        cfg.k = k;
        cfg.k_max = k_max;
        cfg.alpha = alpha;
        cfg.replicates = replicates;
        cfg.refit = !no_refit;
        cfg.seed = seed;
        return cfg;
    }
};

// ---- handlers ----

std::vector<Hyperparams> fit_all(const DatasetBundle& bundle, int restarts, int iters,
                                 std::uint64_t seed) {
    std::vector<Hyperparams> out;
    for (std::size_t s = 0; s < bundle.streams.size(); ++s) {
        FitConfig fc;
        fc.restarts = restarts;
        fc.max_iters = iters;
        fc.seed = Rng::derive(seed, 90001ULL + s);
        const Dataset& d = bundle.streams[s];
        out.push_back(fit_hyperparameters(d, Hyperparams::defaults_for(d), fc));
        log_info("fitted stream '" + bundle.labels[s] + "' (n=" + std::to_string(d.size()) + ")");
    }
    return out;
}

int run_fit(const FitCmd& cmd, const std::string& echo) {
    const DatasetBundle bundle = cmd.input.load();
    const std::vector<Hyperparams> hps = fit_all(bundle, cmd.restarts, cmd.iters, cmd.seed);

    nlohmann::json doc;
    if (hps.size() == 1 && bundle.labels.front().empty()) {
        doc = hp_to_json(hps.front());
        doc["config_echo"] = echo;
    } else {
        doc = nlohmann::json::array();
        for (std::size_t s = 0; s < hps.size(); ++s)
            doc.push_back({{"stream", bundle.labels[s]}, {"hp", hp_to_json(hps[s])}});
    }
    std::ofstream f(out_or_stdout(cmd.out));
    if (!f) throw IoError("cannot write " + cmd.out);
    f << doc.dump(2) << '\n';
    return 0;
}

struct ScanExecution {
    std::vector<ScanResult> ranked;
    std::optional<SignificanceReport> significance;
    ScanConfig config;
};

ScanExecution execute_scan(const DatasetBundle& bundle, const std::vector<Hyperparams>& hps,
                           const ScanCmd& cmd) {
    ScanExecution ex;
    const bool multi = bundle.streams.size() > 1;
    ex.config.k = cmd.k;
    ex.config.k_max = cmd.k_max;
    ex.config.diagonalize = cmd.method == "independent";
    ex.config.method = cmd.method == "gpns"
                           ? SearchMethod{}
                           : method_from_flags(cmd.method, cmd.direction, cmd.bm_iters, cmd.cap);

    ScanOutput output;
    if (multi) {
        if (cmd.method == "gpns")
            throw InputError("gpns does not support multi-stream data; use a subset-search method");
        ex.config.mode = ScanConfig::Mode::MultiStream;
        output = multi_stream_scan(bundle.streams, hps, cmd.k, ex.config.method);
    } else if (cmd.method == "gpns") {
        ex.config.mode = ScanConfig::Mode::Gpns;
        output = gpns(bundle.streams.front(), hps.front(), cmd.k_max);
    } else {
        ex.config.mode = ScanConfig::Mode::Gpss;
        GpssEngine engine(bundle.streams.front().x, hps.front(), cmd.k, ex.config.method,
                          ex.config.diagonalize);
        output = engine.scan(bundle.streams.front().y);
    }
    ex.ranked = std::move(output.results);

    if (cmd.replicates > 0) {
        SignificanceReport threshold =
            multi ? randomization_threshold(bundle.streams, hps, ex.config, cmd.replicates,
                                            cmd.alpha, cmd.seed)
                  : randomization_threshold(bundle.streams.front(), hps.front(), ex.config,
                                            cmd.replicates, cmd.alpha, cmd.seed);
        ex.significance = significance_report(ex.ranked, threshold, ex.config);
    }
    return ex;
}

int run_scan(const ScanCmd& cmd, const std::string& echo) {
    const DatasetBundle bundle = cmd.input.load();
    std::vector<Hyperparams> hps;
    if (!cmd.hp_path.empty()) {
        hps = hps_from_file(cmd.hp_path, bundle.streams.size());
    } else {
        log_info("no --hp given; fitting hyperparameters first");
        hps = fit_all(bundle, cmd.restarts, cmd.iters, cmd.seed);
    }

    ScanExecution ex = execute_scan(bundle, hps, cmd);

    std::vector<ScanResult> report = cmd.no_dedup ? ex.ranked : deduplicate_results(ex.ranked);
    if (cmd.top > 0 && static_cast<int>(report.size()) > cmd.top) report.resize(cmd.top);

    // Detection metrics against a stored truth mask, when present.
    bool have_truth = false;
    for (const auto& t : bundle.truth) have_truth |= !t.empty();
    if (have_truth && !report.empty()) {
        std::set<std::pair<int, int>> truth_set, detected_set;
        for (std::size_t s = 0; s < bundle.truth.size(); ++s)
            for (int i : bundle.truth[s]) truth_set.emplace(static_cast<int>(s), i);
        for (const auto& m : report.front().members) detected_set.emplace(m.stream, m.index);
        std::size_t hit = 0;
        for (const auto& d : detected_set) hit += truth_set.count(d);
        const double recall = truth_set.empty() ? 1.0 : double(hit) / truth_set.size();
        const double precision = detected_set.empty() ? 0.0 : double(hit) / detected_set.size();
        log_info("top-result recall=" + std::to_string(recall) +
                 " precision=" + std::to_string(precision) +
                 " detected=" + std::to_string(detected_set.size()));
    }

    const ResultFormat fmt = cmd.format == "csv" ? ResultFormat::Csv : ResultFormat::Json;
    export_results(report, bundle.streams, ex.significance, out_or_stdout(cmd.out), fmt, echo);
    return 0;
}

int run_test(const ScanCmd& cmd, const std::string& echo) {
    const DatasetBundle bundle = cmd.input.load();
    std::vector<Hyperparams> hps;
    if (!cmd.hp_path.empty()) {
        hps = hps_from_file(cmd.hp_path, bundle.streams.size());
    } else {
        log_info("no --hp given; fitting hyperparameters first");
        hps = fit_all(bundle, cmd.restarts, cmd.iters, cmd.seed);
    }
    ScanCmd with_test = cmd;
    if (with_test.replicates <= 0) with_test.replicates = 100;
    ScanExecution ex = execute_scan(bundle, hps, with_test);

    nlohmann::json doc;
    doc["version"] = 1;
    doc["config_echo"] = echo;
    doc["alpha"] = ex.significance->alpha;
    doc["replicates"] = ex.significance->replicates;
    doc["threshold"] = ex.significance->threshold;
    doc["null_max_llrs"] = ex.significance->null_max_llrs;
    nlohmann::json results = nlohmann::json::array();
    int rank = 1;
    for (const auto& r : ex.significance->results) {
        results.push_back({{"rank", rank++},
                           {"llr", r.result.subset.llr},
                           {"p_value", r.p_value},
                           {"significant", r.significant}});
        if (rank > 50) break;  // the threshold is the point of this command
    }
    doc["results"] = std::move(results);
    std::ofstream f(out_or_stdout(cmd.out));
    if (!f) throw IoError("cannot write " + cmd.out);
    f << doc.dump(2) << '\n';
    return 0;
}

int run_synth(const SynthCmd& cmd) {
    Hyperparams hp = default_synth_hyperparams();
    if (!cmd.hp_path.empty()) hp = hps_from_file(cmd.hp_path, 1).front();

    DatasetBundle bundle;
    for (int s = 0; s < std::max(1, cmd.streams); ++s) {
        Dataset data = synth_generate(cmd.grid, hp, Rng::derive(cmd.seed, 11ULL + s));
        bundle.labels.push_back(cmd.streams > 1 ? "s" + std::to_string(s) : "");
        bundle.streams.push_back(std::move(data));
        bundle.truth.emplace_back();
    }

    if (cmd.factor >= 1.0) {
        InjectionSpec spec;
        spec.factor = cmd.factor;
        spec.density = cmd.density;
        spec.neighborhood_size = cmd.inject_k;
        spec.seed = Rng::derive(cmd.seed, 23);
        // one anomalous site set, applied to every stream
        InjectionResult first = inject_anomaly(bundle.streams.front(), spec);
        for (std::size_t s = 0; s < bundle.streams.size(); ++s) {
            Eigen::VectorXd y = bundle.streams[s].y;
            for (int i : first.truth) y[i] *= cmd.factor;
            bundle.streams[s] = Dataset(bundle.streams[s].x, std::move(y));
            bundle.truth[s] = first.truth;
        }
        log_info("injected " + std::to_string(first.truth.size()) + " anomalous points");
    }

    save_dataset_csv(out_or_stdout(cmd.out), bundle);
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Anomalous-pattern detection in correlated data: GP regression + subset scanning"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key=value config file (flags override)");

    FitCmd fit_cmd;
    ScanCmd scan_cmd, test_cmd;
    SynthCmd synth_cmd;
    BenchCommon bench_factor, bench_density, bench_ratio, bench_runtime;
    std::vector<double> factors = {1.0, 1.2, 1.4, 1.6, 1.8, 2.0};
    std::vector<double> densities = {0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<std::string> factor_methods = {"beta-max", "grq", "stepwise", "independent"};
    std::vector<std::string> density_methods = {"beta-max", "grq", "stepwise", "gpns"};
    std::vector<int> ratio_ks = {10};
    std::vector<int> runtime_ks = {8, 12, 16, 24};
    double bench_density_factor = 2.0;

    auto* fit = app.add_subcommand("fit", "Fit GP hyperparameters by maximum likelihood");
    fit_cmd.input.attach(fit);
    fit->add_option("--restarts", fit_cmd.restarts, "Random restarts");
    fit->add_option("--iters", fit_cmd.iters, "Gradient-ascent iterations per start");
    fit->add_option("--seed", fit_cmd.seed, "Random seed");
    fit->add_option("--out", fit_cmd.out, "Output path (default stdout)");

    auto attach_scan_options = [&](CLI::App* cmd, ScanCmd& sc) {
        sc.input.attach(cmd);
        cmd->add_option("--method", sc.method,
                        "gpns | beta-max | grq | stepwise | exhaustive | independent")
            ->check(CLI::IsMember(
                {"gpns", "beta-max", "grq", "stepwise", "exhaustive", "independent"}));
        cmd->add_option("--k", sc.k, "Neighborhood size for subset scans");
        cmd->add_option("--k-max", sc.k_max, "Maximum neighborhood size for gpns");
        cmd->add_option("--direction", sc.direction, "positive | negative | both")
            ->check(CLI::IsMember({"positive", "negative", "both"}));
        cmd->add_option("--bm-iters", sc.bm_iters, "Iterative priority rounds");
        cmd->add_option("--exhaustive-cap", sc.cap, "Hard cap on exhaustive neighborhood size");
        cmd->add_option("--hp", sc.hp_path, "Hyperparameter JSON (from `fit`)");
        cmd->add_option("--restarts", sc.restarts, "Fit restarts when fitting inline");
        cmd->add_option("--iters", sc.iters, "Fit iterations when fitting inline");
        cmd->add_option("--R", sc.replicates, "Randomization replicates (0 = no testing)");
        cmd->add_option("--alpha", sc.alpha, "Significance level");
        cmd->add_option("--seed", sc.seed, "Random seed");
        cmd->add_option("--out", sc.out, "Output path (default stdout)");
    };

    auto* scan = app.add_subcommand("scan", "Scan for the most anomalous subsets");
    attach_scan_options(scan, scan_cmd);
    scan->add_option("--top", scan_cmd.top, "Keep only the top N results (0 = all)");
    scan->add_flag("--no-dedup", scan_cmd.no_dedup, "Keep overlapping results");
    scan->add_option("--format", scan_cmd.format, "json | csv")
        ->check(CLI::IsMember({"json", "csv"}));

    auto* test = app.add_subcommand("test", "Randomization testing for scan significance");
    attach_scan_options(test, test_cmd);

    auto* synth = app.add_subcommand("synth", "Generate synthetic data, optionally injected");
    synth->add_option("--grid", synth_cmd.grid, "Grid side length (grid^2 points)");
    synth->add_option("--factor", synth_cmd.factor, "Multiplicative anomaly factor (>= 1; 0 = none)");
    synth->add_option("--density", synth_cmd.density, "Fraction of the neighborhood scaled");
    synth->add_option("--inject-k", synth_cmd.inject_k, "Neighborhood size for injection");
    synth->add_option("--streams", synth_cmd.streams, "Independent streams sharing the grid");
    synth->add_option("--hp", synth_cmd.hp_path, "Generating hyperparameter JSON");
    synth->add_option("--seed", synth_cmd.seed, "Random seed");
    synth->add_option("--out", synth_cmd.out, "Output path (default stdout)");

    auto* bench = app.add_subcommand("bench", "Synthetic experiment tables");
    bench->require_subcommand(1);
    auto attach_bench = [&](CLI::App* cmd, BenchCommon& bc) {
        cmd->add_option("--trials", bc.trials, "Trials per setting");
        cmd->add_option("--k", bc.k, "GPSS neighborhood size");
        cmd->add_option("--k-max", bc.k_max, "GPNS maximum neighborhood size");
        cmd->add_option("--grid", bc.grid, "Grid side length");
        cmd->add_option("--R", bc.replicates, "Randomization replicates per trial");
        cmd->add_option("--alpha", bc.alpha, "Significance level");
        cmd->add_option("--seed", bc.seed, "Random seed");
        cmd->add_flag("--no-refit", bc.no_refit, "Scan with the generating hyperparameters");
        cmd->add_option("--out", bc.out, "Output path (default stdout)");
    };
    auto* bf = bench->add_subcommand("factor", "Precision/recall/power against the shift factor");
    attach_bench(bf, bench_factor);
    bf->add_option("--factors", factors, "Multiplicative factors")->delimiter(',');
    bf->add_option("--methods", factor_methods, "Methods to compare")->delimiter(',');
    auto* bd = bench->add_subcommand("density", "Metrics against anomaly density");
    attach_bench(bd, bench_density);
    bd->add_option("--densities", densities, "Densities in (0,1]")->delimiter(',');
    bd->add_option("--methods", density_methods, "Methods to compare")->delimiter(',');
    bd->add_option("--factor", bench_density_factor, "Shift factor during the density sweep");
    auto* br = bench->add_subcommand("ratio", "Approximation ratio against exhaustive search");
    attach_bench(br, bench_ratio);
    br->add_option("--k-list", ratio_ks, "Neighborhood sizes")->delimiter(',');
    auto* bt = bench->add_subcommand("runtime", "Wall-clock growth of the search methods");
    attach_bench(bt, bench_runtime);
    bt->add_option("--k-list", runtime_ks, "Neighborhood sizes")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            std::cout << app.help();
            return 0;
        }
        std::cerr << "gpscan: " << e.what() << '\n' << app.get_name() << ": use --help\n";
        return 2;
    }

    std::string echo = "command: " + join_argv(argc, argv);
    try {
        const CLI::Option* cfg_opt = app.get_config_ptr();
        if (cfg_opt && cfg_opt->count() > 0)
            echo += "\nconfig:\n" + read_file_or_empty(cfg_opt->as<std::string>());

        if (*fit) return run_fit(fit_cmd, echo);
        if (*scan) return run_scan(scan_cmd, echo);
        if (*test) return run_test(test_cmd, echo);
        if (*synth) return run_synth(synth_cmd);
        if (*bf) {
            auto rows = run_factor_sweep(factors, bench_factor.trials, factor_methods,
                                         bench_factor.config());
            write_metrics_csv(out_or_stdout(bench_factor.out), rows, echo);
            return 0;
        }
        if (*bd) {
            ExperimentConfig cfg = bench_density.config();
            cfg.density_sweep_factor = bench_density_factor;
            auto rows = run_density_sweep(densities, bench_density.trials, density_methods, cfg);
            write_metrics_csv(out_or_stdout(bench_density.out), rows, echo);
            return 0;
        }
        if (*br) {
            auto rows = run_approx_ratio(bench_ratio.trials, ratio_ks, bench_ratio.config());
            write_ratio_csv(out_or_stdout(bench_ratio.out), rows, echo);
            return 0;
        }
        if (*bt) {
            auto report = run_runtime_bench(runtime_ks, bench_runtime.config());
            write_runtime_csv(out_or_stdout(bench_runtime.out), report, echo);
            return 0;
        }
        std::cerr << "gpscan: no subcommand\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "gpscan: error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "gpscan: unexpected error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace gpscan
