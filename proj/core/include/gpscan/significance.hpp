#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gpscan/scanner.hpp"

namespace gpscan {

/// Identifies a scan pipeline so thresholds are only applied to scans run
/// under the same configuration.
struct ScanConfig {
    enum class Mode { Gpss, Gpns, MultiStream };
    Mode mode = Mode::Gpss;
    SearchMethod method;        // ignored for Gpns
    int k = 15;                 // Gpss / MultiStream neighborhood size
    int k_max = 15;             // Gpns maximum neighborhood size
    bool diagonalize = false;   // independent-baseline variant

    bool compatible_with(const ScanConfig& o) const {
        if (mode != o.mode || diagonalize != o.diagonalize) return false;
        if (mode == Mode::Gpns) return k_max == o.k_max;
        return k == o.k && method.variant == o.method.variant &&
               method.direction == o.method.direction;
    }
};

struct SignificantResult {
    ScanResult result;
    double p_value = 1.0;
    bool significant = false;
};

/// Randomization-test output: null max-LLR distribution, the (1-alpha)
/// threshold, and (after significance_report) the scored observed results.
struct SignificanceReport {
    double alpha = 0.05;
    int replicates = 0;
    std::vector<double> null_max_llrs;  // replicate order
    double threshold = 0.0;
    ScanConfig config;
    std::uint64_t seed = 0;
    std::vector<SignificantResult> results;  // observed, ranked, with p-values

    std::size_t significant_count() const {
        std::size_t c = 0;
        for (const auto& r : results) c += r.significant;
        return c;
    }
};

/// The ceil((1-alpha) R)-th order statistic (ascending) of the null maxima.
double quantile_threshold(std::vector<double> null_max_llrs, double alpha);

/// Permutation-style p-value with the +1 correction:
/// (1 + #{null maxima >= observed}) / (R + 1).
double empirical_p_value(const std::vector<double>& null_max_llrs, double observed);

/// Core randomization loop with injectable sampler and scan, used by the
/// public entry points and by tests that exercise the retry path. `draw`
/// maps a replicate seed to a response vector; `scan_max` maps it to the
/// replicate's maximum LLR. Failed replicates are retried with the next
/// derived sub-seed, at most 3 retries each.
SignificanceReport randomization_threshold_impl(
    int replicates, double alpha, std::uint64_t seed, const ScanConfig& config,
    const std::function<double(std::uint64_t)>& scan_max_for_seed);

/// Draw R prior replicates at the observed covariates, scan each under the
/// given configuration, and return the (1-alpha) threshold of the max LLRs.
SignificanceReport randomization_threshold(const Dataset& data, const Hyperparams& hp,
                                           const ScanConfig& config, int replicates,
                                           double alpha, std::uint64_t seed);
SignificanceReport randomization_threshold(const std::vector<Dataset>& streams,
                                           const std::vector<Hyperparams>& hps,
                                           const ScanConfig& config, int replicates,
                                           double alpha, std::uint64_t seed);

/// Attach p-values and significance flags to an observed ranked scan.
/// Refuses when the observed scan's configuration differs from the one the
/// threshold was computed under.
SignificanceReport significance_report(const std::vector<ScanResult>& observed,
                                       const SignificanceReport& threshold_part,
                                       const ScanConfig& observed_config);

}  // namespace gpscan
