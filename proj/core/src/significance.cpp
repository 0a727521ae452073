#include "gpscan/significance.hpp"

#include <algorithm>
#include <cmath>

#include "gpscan/gp.hpp"
#include "gpscan/rng.hpp"

namespace gpscan {

double quantile_threshold(std::vector<double> null_max_llrs, double alpha) {
    const int r = static_cast<int>(null_max_llrs.size());
    if (r < 1) throw InputError("quantile_threshold: no replicates");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("quantile_threshold: alpha outside (0,1)");
    std::sort(null_max_llrs.begin(), null_max_llrs.end());
    const int rank = static_cast<int>(std::ceil((1.0 - alpha) * r));  // 1-based
    const int idx = std::clamp(rank, 1, r) - 1;
    return null_max_llrs[idx];
}

double empirical_p_value(const std::vector<double>& null_max_llrs, double observed) {
    std::size_t count = 0;
    for (double v : null_max_llrs) count += (v >= observed);
    return static_cast<double>(1 + count) / static_cast<double>(null_max_llrs.size() + 1);
}

SignificanceReport randomization_threshold_impl(
    int replicates, double alpha, std::uint64_t seed, const ScanConfig& config,
    const std::function<double(std::uint64_t)>& scan_max_for_seed) {
    if (replicates < 20) throw InputError("randomization_threshold: need at least 20 replicates");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InputError("randomization_threshold: alpha outside (0,1)");

    SignificanceReport report;
    report.alpha = alpha;
    report.replicates = replicates;
    report.config = config;
    report.seed = seed;
    report.null_max_llrs.reserve(replicates);

    for (int r = 0; r < replicates; ++r) {
        bool done = false;
        for (int attempt = 0; attempt <= 3 && !done; ++attempt) {
            const std::uint64_t sub =
                Rng::derive(seed, static_cast<std::uint64_t>(r) * 4ULL + attempt);
            try {
                report.null_max_llrs.push_back(scan_max_for_seed(sub));
                done = true;
            } catch (const Error&) {
                if (attempt == 3) throw;
            }
        }
    }
    report.threshold = quantile_threshold(report.null_max_llrs, alpha);
    return report;
}

namespace {

SignificanceReport run_single_stream(const Dataset& data, const Hyperparams& hp,
                                     const ScanConfig& config, int replicates, double alpha,
                                     std::uint64_t seed) {
    const PriorSampler sampler(data.x, hp);
    if (config.mode == ScanConfig::Mode::Gpns) {
        GpnsEngine engine(data.x, hp, config.k_max);
        return randomization_threshold_impl(
            replicates, alpha, seed, config,
            [&](std::uint64_t s) { return engine.max_llr(sampler.draw(s)); });
    }
    GpssEngine engine(data.x, hp, config.k, config.method, config.diagonalize);
    return randomization_threshold_impl(
        replicates, alpha, seed, config,
        [&](std::uint64_t s) { return engine.max_llr(sampler.draw(s)); });
}

}  // namespace

SignificanceReport randomization_threshold(const Dataset& data, const Hyperparams& hp,
                                           const ScanConfig& config, int replicates,
                                           double alpha, std::uint64_t seed) {
    if (config.mode == ScanConfig::Mode::MultiStream)
        return randomization_threshold(std::vector<Dataset>{data},
                                       std::vector<Hyperparams>{hp}, config, replicates, alpha,
                                       seed);
    return run_single_stream(data, hp, config, replicates, alpha, seed);
}

SignificanceReport randomization_threshold(const std::vector<Dataset>& streams,
                                           const std::vector<Hyperparams>& hps,
                                           const ScanConfig& config, int replicates,
                                           double alpha, std::uint64_t seed) {
    if (config.mode != ScanConfig::Mode::MultiStream && streams.size() == 1)
        return run_single_stream(streams.front(), hps.front(), config, replicates, alpha, seed);

    MultiStreamEngine engine(streams, hps, config.k, config.method);
    std::vector<PriorSampler> samplers;
    samplers.reserve(streams.size());
    for (std::size_t i = 0; i < streams.size(); ++i) samplers.emplace_back(streams[i].x, hps[i]);
    return randomization_threshold_impl(replicates, alpha, seed, config, [&](std::uint64_t s) {
        std::vector<Eigen::VectorXd> ys(streams.size());
        for (std::size_t i = 0; i < streams.size(); ++i)
            ys[i] = samplers[i].draw(Rng::derive(s, i));
        return engine.max_llr(ys);
    });
}

SignificanceReport significance_report(const std::vector<ScanResult>& observed,
                                       const SignificanceReport& threshold_part,
                                       const ScanConfig& observed_config) {
    if (!threshold_part.config.compatible_with(observed_config))
        throw ConfigMismatchError(
            "significance_report: observed scan configuration differs from the threshold's");

    SignificanceReport report = threshold_part;
    report.results.clear();
    report.results.reserve(observed.size());
    for (const auto& res : observed) {
        SignificantResult sr;
        sr.result = res;
        sr.p_value = empirical_p_value(report.null_max_llrs, res.subset.llr);
        sr.significant = res.subset.llr > report.threshold;
        report.results.push_back(std::move(sr));
    }
    return report;
}

}  // namespace gpscan
