#include "gpscan/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "gpscan/linalg.hpp"
#include "gpscan/rng.hpp"

namespace gpscan {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void echo_comment(std::ofstream& out, const std::string& config_echo) {
    std::istringstream echo(config_echo);
    std::string line;
    while (std::getline(echo, line)) out << "# " << line << '\n';
}

}  // namespace

void InjectionSpec::validate() const {
    if (!(factor >= 1.0)) throw InputError("InjectionSpec: factor must be >= 1");
    if (!(density > 0.0 && density <= 1.0)) throw InputError("InjectionSpec: density outside (0,1]");
    if (neighborhood_size < 1) throw InputError("InjectionSpec: neighborhood_size must be positive");
}

Hyperparams default_synth_hyperparams() {
    Hyperparams hp = Hyperparams::isotropic(2, 2.5, 1.0, 0.1, 3.0);
    return hp;
}

Dataset synth_generate(int grid_side, const Hyperparams& hp, std::uint64_t seed) {
    if (grid_side < 1) throw InputError("synth_generate: grid_side must be positive");
    const int n = grid_side * grid_side;
    if (n > 5000) throw InputError("synth_generate: grid too large for exact inference");
    Eigen::MatrixXd x(n, 2);
    int row = 0;
    for (int i = 0; i < grid_side; ++i)
        for (int j = 0; j < grid_side; ++j, ++row) {
            x(row, 0) = i;
            x(row, 1) = j;
        }
    Eigen::VectorXd y = sample_prior(x, hp, seed);
    return Dataset(std::move(x), std::move(y));
}

InjectionResult inject_anomaly(const Dataset& data, const InjectionSpec& spec) {
    spec.validate();
    const int n = data.size();
    const int k = std::min(spec.neighborhood_size, n);

    Rng rng(spec.seed);
    const int center = static_cast<int>(rng.integer(n));
    const std::vector<Neighborhood> nbs = build_neighborhoods(data.x, k);
    std::vector<int> pool = nbs[center].members;

    const int take = static_cast<int>(std::ceil(spec.density * k));
    // partial Fisher-Yates draw without replacement
    std::vector<int> truth;
    truth.reserve(take);
    for (int i = 0; i < take; ++i) {
        const int j = i + static_cast<int>(rng.integer(pool.size() - i));
        std::swap(pool[i], pool[j]);
        truth.push_back(pool[i]);
    }
    std::sort(truth.begin(), truth.end());

    Eigen::VectorXd y = data.y;
    for (int i : truth) y[i] *= spec.factor;
    return InjectionResult{Dataset(data.x, std::move(y), data.stream_id), std::move(truth)};
}

DetectionMetrics evaluate_detection(const std::vector<int>& detected,
                                    const std::vector<int>& truth, bool significant) {
    DetectionMetrics m;
    m.detected_size = static_cast<int>(detected.size());
    m.power_at_alpha = significant ? 1.0 : 0.0;

    std::vector<int> det = detected, tru = truth;
    std::sort(det.begin(), det.end());
    std::sort(tru.begin(), tru.end());
    std::vector<int> inter;
    std::set_intersection(det.begin(), det.end(), tru.begin(), tru.end(),
                          std::back_inserter(inter));
    const double hit = static_cast<double>(inter.size());
    m.precision = det.empty() ? (tru.empty() ? 1.0 : 0.0) : hit / det.size();
    m.recall = tru.empty() ? 1.0 : hit / tru.size();
    return m;
}

bool is_known_method(const std::string& method) {
    return method == "beta-max" || method == "grq" || method == "stepwise" ||
           method == "exhaustive" || method == "independent" || method == "gpns" ||
           method == "gp-outlier";
}

namespace {

SearchMethod search_method_for(const std::string& name, const ExperimentConfig& cfg) {
    SearchMethod m;
    m.direction = SearchMethod::Direction::Both;
    m.max_iters = cfg.beta_max_iters;
    m.exhaustive_cap = cfg.exhaustive_cap;
    if (name == "beta-max" || name == "independent") m.variant = SearchMethod::Variant::BetaMax;
    else if (name == "grq") m.variant = SearchMethod::Variant::GRQ;
    else if (name == "stepwise") m.variant = SearchMethod::Variant::Stepwise;
    else if (name == "exhaustive") m.variant = SearchMethod::Variant::Exhaustive;
    else throw InputError("unknown subset-search method: " + name);
    return m;
}

// Per-point outlier classifier on the full-data posterior: standardized
// residuals z = noise * P (y - m) ./ sd with sd from the posterior marginals.
// Receives the injected-anomaly count to set its detection threshold, the
// extra information the evaluation protocol grants pointwise baselines.
class OutlierEngine {
public:
    OutlierEngine(const Eigen::MatrixXd& x, const Hyperparams& hp) {
        hp.validate();
        mean_ = mean_function(x, hp);
        Eigen::MatrixXd kk = kernel_matrix(x, x, hp);
        Eigen::MatrixXd s = kk;
        s.diagonal().array() += hp.noise_variance;
        auto chol = jittered_cholesky(s);
        precision_ = spd_inverse(chol.llt, x.rows());
        const Eigen::MatrixXd v = chol.llt.solve(kk);
        const Eigen::VectorXd latent_var =
            kk.diagonal() - (kk.array() * v.array()).colwise().sum().matrix().transpose();
        sd_ = (latent_var.array().max(0.0) + hp.noise_variance).sqrt().matrix();
        noise_ = hp.noise_variance;
    }

    Eigen::VectorXd zscores(const Eigen::VectorXd& y) const {
        const Eigen::VectorXd resid = noise_ * (precision_ * (y - mean_));
        return resid.array() / sd_.array();
    }
    double max_abs_z(const Eigen::VectorXd& y) const {
        return zscores(y).cwiseAbs().maxCoeff();
    }
    std::vector<int> top_by_abs_z(const Eigen::VectorXd& y, int count) const {
        const Eigen::VectorXd z = zscores(y).cwiseAbs();
        std::vector<int> idx(z.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            if (z[a] != z[b]) return z[a] > z[b];
            return a < b;
        });
        idx.resize(std::min<std::size_t>(idx.size(), std::max(0, count)));
        return idx;
    }

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd precision_;
    Eigen::VectorXd sd_;
    double noise_ = 0.0;
};

}  // namespace

TrialOutcome run_detection_trial(const Dataset& injected, const std::vector<int>& truth,
                                 const std::string& method, const Hyperparams& hp,
                                 const ExperimentConfig& cfg, std::uint64_t seed) {
    TrialOutcome out;

    const PriorSampler sampler(injected.x, hp);

    if (method == "gp-outlier") {
        OutlierEngine engine(injected.x, hp);
        out.top_llr = engine.max_abs_z(injected.y);
        const auto report = randomization_threshold_impl(
            cfg.replicates, cfg.alpha, seed, ScanConfig{},
            [&](std::uint64_t s) { return engine.max_abs_z(sampler.draw(s)); });
        out.threshold = report.threshold;
        out.detected = engine.top_by_abs_z(injected.y, static_cast<int>(truth.size()));
        out.metrics = evaluate_detection(out.detected, truth, out.top_llr > out.threshold);
        return out;
    }

    if (method == "gpns") {
        GpnsEngine engine(injected.x, hp, cfg.k_max);
        ScanOutput observed = engine.scan(injected.y);
        out.top_llr = observed.results.empty() ? 0.0 : observed.results.front().subset.llr;
        const auto report = randomization_threshold_impl(
            cfg.replicates, cfg.alpha, seed, ScanConfig{},
            [&](std::uint64_t s) { return engine.max_llr(sampler.draw(s)); });
        out.threshold = report.threshold;
        if (!observed.results.empty())
            out.detected = observed.results.front().included_indices();
        out.metrics = evaluate_detection(out.detected, truth, out.top_llr > out.threshold);
        return out;
    }

    const bool diag = method == "independent";
    GpssEngine engine(injected.x, hp, cfg.k, search_method_for(method, cfg), diag);
    ScanOutput observed = engine.scan(injected.y);
    out.top_llr = observed.results.empty() ? 0.0 : observed.results.front().subset.llr;
    const auto report = randomization_threshold_impl(
        cfg.replicates, cfg.alpha, seed, ScanConfig{},
        [&](std::uint64_t s) { return engine.max_llr(sampler.draw(s)); });
    out.threshold = report.threshold;
    if (!observed.results.empty()) out.detected = observed.results.front().included_indices();
    out.metrics = evaluate_detection(out.detected, truth, out.top_llr > out.threshold);
    return out;
}

namespace {

std::vector<MetricsRow> run_sweep(const std::vector<double>& levels, bool level_is_density,
                                  int trials, const std::vector<std::string>& methods,
                                  const ExperimentConfig& cfg) {
    for (const auto& m : methods)
        if (!is_known_method(m)) throw InputError("unknown method: " + m);

    std::vector<MetricsRow> rows;
    for (double level : levels) {
        std::vector<MetricsRow> per_method(methods.size());
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            per_method[mi].method = methods[mi];
            per_method[mi].k = methods[mi] == "gpns" ? cfg.k_max : cfg.k;
            per_method[mi].factor_or_density = level;
        }

        for (int trial = 0; trial < trials; ++trial) {
            const std::uint64_t base = Rng::derive(
                Rng::derive(cfg.seed, static_cast<std::uint64_t>(trial)),
                static_cast<std::uint64_t>(std::llround(level * 1e9)));
            Dataset data = synth_generate(cfg.grid_side, cfg.gen_hp, Rng::derive(base, 0));

            InjectionSpec spec;
            spec.factor = level_is_density ? cfg.density_sweep_factor : level;
            spec.density = level_is_density ? level : 1.0;
            spec.neighborhood_size = cfg.k;
            spec.seed = Rng::derive(base, 1);
            InjectionResult inj = inject_anomaly(data, spec);

            Hyperparams hp = cfg.gen_hp;
            if (cfg.refit) {
                FitConfig fc = cfg.fit;
                fc.seed = Rng::derive(base, 2);
                hp = fit_hyperparameters(inj.data, Hyperparams::defaults_for(inj.data), fc);
            }

            for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                const auto t0 = Clock::now();
                TrialOutcome o = run_detection_trial(inj.data, inj.truth, methods[mi], hp, cfg,
                                                     Rng::derive(base, 3 + mi));
                per_method[mi].wallclock_ms += ms_since(t0);
                per_method[mi].precision += o.metrics.precision;
                per_method[mi].recall += o.metrics.recall;
                per_method[mi].power += o.metrics.power_at_alpha;
                per_method[mi].detected_size += o.metrics.detected_size;
            }
        }
        for (auto& row : per_method) {
            const double t = std::max(1, trials);
            row.precision /= t;
            row.recall /= t;
            row.power /= t;
            row.detected_size /= t;
            row.wallclock_ms /= t;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace

std::vector<MetricsRow> run_factor_sweep(const std::vector<double>& factors, int trials,
                                         const std::vector<std::string>& methods,
                                         const ExperimentConfig& cfg) {
    return run_sweep(factors, false, trials, methods, cfg);
}

std::vector<MetricsRow> run_density_sweep(const std::vector<double>& densities, int trials,
                                          const std::vector<std::string>& methods,
                                          const ExperimentConfig& cfg) {
    for (double d : densities)
        if (!(d > 0.0 && d <= 1.0)) throw InputError("run_density_sweep: density outside (0,1]");
    return run_sweep(densities, true, trials, methods, cfg);
}

SearchInstance random_correlated_instance(int m, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd x(m, 2);
    for (int i = 0; i < m; ++i) {
        x(i, 0) = 3.0 * rng.uniform();
        x(i, 1) = 3.0 * rng.uniform();
    }
    Hyperparams hp = Hyperparams::isotropic(2, 0.6 + 0.9 * rng.uniform(), 1.0,
                                            0.05 + 0.25 * rng.uniform());
    Eigen::MatrixXd sigma = kernel_matrix(x, x, hp);
    sigma.diagonal().array() += hp.noise_variance;

    SearchInstance inst;
    inst.post = PosteriorGaussian::from_moments(Eigen::VectorXd::Zero(m), sigma);
    inst.y = Eigen::MatrixXd(inst.post.chol) * rng.normal_vector(m);

    // shift a random subset so interesting anomalous structure exists
    const int shift_count = std::max(1, m / 3);
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < shift_count; ++i) {
        const int j = i + static_cast<int>(rng.integer(m - i));
        std::swap(idx[i], idx[j]);
    }
    const double beta = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (1.0 + 2.0 * rng.uniform());
    for (int i = 0; i < shift_count; ++i) inst.y[idx[i]] += beta;
    return inst;
}

SearchInstance random_diagonal_instance(int m, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd vars(m);
    for (int i = 0; i < m; ++i) vars[i] = 0.5 + 1.5 * rng.uniform();

    SearchInstance inst;
    inst.post = PosteriorGaussian::from_moments(Eigen::VectorXd::Zero(m),
                                                Eigen::MatrixXd(vars.asDiagonal()));
    inst.y.resize(m);
    for (int i = 0; i < m; ++i) inst.y[i] = std::sqrt(vars[i]) * rng.normal();
    const int shift_count = std::max(1, m / 3);
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < shift_count; ++i) {
        const int j = i + static_cast<int>(rng.integer(m - i));
        std::swap(idx[i], idx[j]);
    }
    const double beta = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (1.0 + 2.0 * rng.uniform());
    for (int i = 0; i < shift_count; ++i) inst.y[idx[i]] += beta;
    return inst;
}

std::vector<RatioRow> run_approx_ratio(int trials, const std::vector<int>& ks,
                                       const ExperimentConfig& cfg) {
    const std::vector<std::string> methods = {"beta-max", "grq", "stepwise"};
    std::vector<RatioRow> rows;
    for (int k : ks) {
        if (k > cfg.exhaustive_cap)
            throw InputError("run_approx_ratio: k exceeds the exhaustive cap");
        std::vector<std::vector<double>> ratios(methods.size());
        for (int t = 0; t < trials; ++t) {
            SearchInstance inst =
                random_correlated_instance(k, Rng::derive(cfg.seed, 7919ULL * k + t));
            SearchResult exact = exhaustive_search(inst.post, inst.y, cfg.exhaustive_cap);
            if (!(exact.best.llr > 0.0)) continue;  // no structure to recover
            for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                SearchMethod sm = search_method_for(methods[mi], cfg);
                SearchResult approx = search_subsets(inst.post, inst.y, sm);
                const double ratio = approx.best.llr / exact.best.llr;
                if (!(ratio > 0.0) || ratio > 1.0)
                    throw NumericalError("run_approx_ratio: ratio outside (0, 1]");
                ratios[mi].push_back(ratio);
            }
        }
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            auto& v = ratios[mi];
            if (v.empty()) continue;
            std::sort(v.begin(), v.end());
            RatioRow row;
            row.method = methods[mi];
            row.k = k;
            row.trials = static_cast<int>(v.size());
            row.median_ratio = v[v.size() / 2];
            row.mean_ratio = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
            row.min_ratio = v.front();
            row.max_ratio = v.back();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

RuntimeReport run_runtime_bench(const std::vector<int>& k_list, const ExperimentConfig& cfg) {
    RuntimeReport report;

    struct Timed {
        std::string method;
        int k;
        double ms;
    };
    auto time_search = [&](const std::string& method, const SearchInstance& inst) {
        SearchMethod sm = search_method_for(method, cfg);
        // best-of-5 rounds of repeated searches
        double best = std::numeric_limits<double>::infinity();
        for (int round = 0; round < 5; ++round) {
            const int reps = method == "exhaustive" ? 3 : 200;
            const auto t0 = Clock::now();
            for (int rep = 0; rep < reps; ++rep) search_subsets(inst.post, inst.y, sm);
            best = std::min(best, ms_since(t0) / reps);
        }
        return best;
    };

    std::vector<std::string> methods = {"beta-max", "grq", "stepwise", "exhaustive"};
    std::map<std::pair<std::string, int>, double> times;
    for (int k : k_list) {
        SearchInstance inst = random_correlated_instance(k, Rng::derive(cfg.seed, 31 + k));
        for (const auto& method : methods) {
            if (method == "exhaustive" && k > cfg.exhaustive_cap) continue;
            const double ms = time_search(method, inst);
            times[{method, k}] = ms;
            report.rows.push_back(RuntimeRow{method, k, ms, 0});
        }
    }

    // growth checks over doubling pairs in the list
    bool exhaustive_ok = true, exhaustive_checked = false;
    bool gpss_ok = true, gpss_checked = false;
    for (int k : k_list) {
        const int k2 = 2 * k;
        if (std::find(k_list.begin(), k_list.end(), k2) == k_list.end()) continue;
        if (times.count({"exhaustive", k}) && times.count({"exhaustive", k2}) && k2 > 15) {
            exhaustive_checked = true;
            exhaustive_ok &= times[{"exhaustive", k2}] > 4.0 * times[{"exhaustive", k}];
        }
        for (const std::string& m : {std::string("beta-max"), std::string("grq"),
                                     std::string("stepwise")}) {
            if (times.count({m, k}) && times.count({m, k2})) {
                gpss_checked = true;
                gpss_ok &= times[{m, k2}] < 4.0 * times[{m, k}];
            }
        }
    }
    report.exhaustive_superpolynomial = exhaustive_checked && exhaustive_ok;
    report.gpss_subquadratic = gpss_checked && gpss_ok;

    // posterior-inference counts per scan at a small fixed size
    {
        const int side = 10;
        Dataset data = synth_generate(side, cfg.gen_hp, Rng::derive(cfg.seed, 77));
        const int k = std::min(cfg.k, side * side - 1);
        const int k_max = std::min(cfg.k_max, side * side - 1);
        GpssEngine gpss_engine(data.x, cfg.gen_hp, k, search_method_for("beta-max", cfg));
        GpnsEngine gpns_engine(data.x, cfg.gen_hp, k_max);
        const auto t0 = Clock::now();
        ScanOutput so = gpss_engine.scan(data.y);
        const double gpss_ms = ms_since(t0);
        const auto t1 = Clock::now();
        ScanOutput no = gpns_engine.scan(data.y);
        const double gpns_ms = ms_since(t1);
        report.gpss_posteriors_per_scan = so.stats.posterior_inferences;
        report.gpns_posteriors_per_scan = no.stats.posterior_inferences;
        report.rows.push_back(RuntimeRow{"gpss-scan", k, gpss_ms, so.stats.posterior_inferences});
        report.rows.push_back(
            RuntimeRow{"gpns-scan", k_max, gpns_ms, no.stats.posterior_inferences});
    }
    return report;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       const std::string& config_echo) {
    std::ofstream out(path);
    if (!out) throw IoError("write_metrics_csv: cannot write " + path);
    echo_comment(out, config_echo);
    out << "method,k,factor_or_density,precision,recall,power,detected_size,wallclock_ms\n";
    for (const auto& r : rows)
        out << r.method << ',' << r.k << ',' << fmt(r.factor_or_density) << ','
            << fmt(r.precision) << ',' << fmt(r.recall) << ',' << fmt(r.power) << ','
            << fmt(r.detected_size) << ',' << fmt(r.wallclock_ms) << '\n';
}

void write_ratio_csv(const std::string& path, const std::vector<RatioRow>& rows,
                     const std::string& config_echo) {
    std::ofstream out(path);
    if (!out) throw IoError("write_ratio_csv: cannot write " + path);
    echo_comment(out, config_echo);
    out << "method,k,trials,median_ratio,mean_ratio,min_ratio,max_ratio\n";
    for (const auto& r : rows)
        out << r.method << ',' << r.k << ',' << r.trials << ',' << fmt(r.median_ratio) << ','
            << fmt(r.mean_ratio) << ',' << fmt(r.min_ratio) << ',' << fmt(r.max_ratio) << '\n';
}

void write_runtime_csv(const std::string& path, const RuntimeReport& report,
                       const std::string& config_echo) {
    std::ofstream out(path);
    if (!out) throw IoError("write_runtime_csv: cannot write " + path);
    echo_comment(out, config_echo);
    out << "method,k,wallclock_ms,posterior_inferences\n";
    for (const auto& r : report.rows)
        out << r.method << ',' << r.k << ',' << fmt(r.wallclock_ms) << ','
            << r.posterior_inferences << '\n';
    out << "# exhaustive_superpolynomial=" << (report.exhaustive_superpolynomial ? 1 : 0)
        << " gpss_subquadratic=" << (report.gpss_subquadratic ? 1 : 0) << '\n';
}

}  // namespace gpscan
