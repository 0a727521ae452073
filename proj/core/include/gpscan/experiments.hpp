#pragma once

#include <string>
#include <vector>

#include "gpscan/data_io.hpp"
#include "gpscan/gp.hpp"
#include "gpscan/significance.hpp"

namespace gpscan {

/// Multiplicative anomaly injected into one neighborhood.
struct InjectionSpec {
    double factor = 2.0;        // >= 1
    int neighborhood_size = 15;
    double density = 1.0;       // fraction of the neighborhood scaled, (0, 1]
    std::uint64_t seed = 0;
    void validate() const;
};

struct DetectionMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double power_at_alpha = 0.0;
    int detected_size = 0;
};

/// Baseline draw on a regular grid_side x grid_side grid of unit-spaced 2D
/// covariates.
Dataset synth_generate(int grid_side, const Hyperparams& hp, std::uint64_t seed);

/// The generating hyperparameters used by the synthetic protocol: strongly
/// correlated 2D field with a constant positive mean, so multiplicative
/// scaling produces a clear level shift.
Hyperparams default_synth_hyperparams();

struct InjectionResult {
    Dataset data;
    std::vector<int> truth;  // indices whose responses were scaled
};
InjectionResult inject_anomaly(const Dataset& data, const InjectionSpec& spec);

DetectionMetrics evaluate_detection(const std::vector<int>& detected,
                                    const std::vector<int>& truth, bool significant);

/// Shared knobs for the synthetic experiments.
struct ExperimentConfig {
    int grid_side = 20;
    Hyperparams gen_hp = default_synth_hyperparams();
    int k = 15;        // GPSS neighborhood size (also the injection size)
    int k_max = 15;    // GPNS maximum
    double alpha = 0.05;
    int replicates = 100;  // randomization replicates per trial
    bool refit = true;     // refit hyperparameters on each injected dataset
    FitConfig fit{1, 60, 1e-4, 0};
    std::uint64_t seed = 1;
    int exhaustive_cap = 25;
    int beta_max_iters = 10;
    double density_sweep_factor = 2.0;  // shift factor used by run_density_sweep
};

/// Known method names: beta-max, grq, stepwise, exhaustive, independent,
/// gpns, gp-outlier.
bool is_known_method(const std::string& method);

/// One injected-data trial for one method: scan, randomization threshold
/// (reusing the scan engine across replicates), detection metrics against
/// the truth mask.
struct TrialOutcome {
    DetectionMetrics metrics;
    double top_llr = 0.0;
    double threshold = 0.0;
    std::vector<int> detected;
};
TrialOutcome run_detection_trial(const Dataset& injected, const std::vector<int>& truth,
                                 const std::string& method, const Hyperparams& hp,
                                 const ExperimentConfig& cfg, std::uint64_t seed);

struct MetricsRow {
    std::string method;
    int k = 0;
    double factor_or_density = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double power = 0.0;
    double detected_size = 0.0;
    double wallclock_ms = 0.0;
};

std::vector<MetricsRow> run_factor_sweep(const std::vector<double>& factors, int trials,
                                         const std::vector<std::string>& methods,
                                         const ExperimentConfig& cfg);

std::vector<MetricsRow> run_density_sweep(const std::vector<double>& densities, int trials,
                                          const std::vector<std::string>& methods,
                                          const ExperimentConfig& cfg);

/// Random single-neighborhood instances for approximation studies: an RBF
/// covariance over scattered 2D points with observation noise, plus a
/// shifted random subset. Returned posterior has mu = 0.
struct SearchInstance {
    PosteriorGaussian post;
    Eigen::VectorXd y;
};
SearchInstance random_correlated_instance(int m, std::uint64_t seed);
SearchInstance random_diagonal_instance(int m, std::uint64_t seed);

struct RatioRow {
    std::string method;
    int k = 0;
    int trials = 0;
    double median_ratio = 0.0;
    double mean_ratio = 0.0;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
};
std::vector<RatioRow> run_approx_ratio(int trials, const std::vector<int>& ks,
                                       const ExperimentConfig& cfg);

struct RuntimeRow {
    std::string method;
    int k = 0;
    double wallclock_ms = 0.0;          // per subset search (or per scan)
    std::int64_t posterior_inferences = 0;  // scan rows only
};
struct RuntimeReport {
    std::vector<RuntimeRow> rows;
    bool exhaustive_superpolynomial = false;  // doubling k multiplies time > 4x past k = 15
    bool gpss_subquadratic = false;           // doubling k multiplies time < 4x
    std::int64_t gpss_posteriors_per_scan = 0;
    std::int64_t gpns_posteriors_per_scan = 0;
};
RuntimeReport run_runtime_bench(const std::vector<int>& k_list, const ExperimentConfig& cfg);

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       const std::string& config_echo);
void write_ratio_csv(const std::string& path, const std::vector<RatioRow>& rows,
                     const std::string& config_echo);
void write_runtime_csv(const std::string& path, const RuntimeReport& report,
                       const std::string& config_echo);

}  // namespace gpscan
