#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "gpscan/gp.hpp"

namespace gpscan {

/// Binary inclusion vector over a neighborhood's points.
struct SubsetWeights {
    std::vector<std::uint8_t> bits;

    SubsetWeights() = default;
    explicit SubsetWeights(std::vector<std::uint8_t> b) : bits(std::move(b)) {}

    static SubsetWeights zeros(int m) { return SubsetWeights(std::vector<std::uint8_t>(m, 0)); }
    static SubsetWeights ones(int m) { return SubsetWeights(std::vector<std::uint8_t>(m, 1)); }
    static SubsetWeights from_indices(int m, const std::vector<int>& idx) {
        SubsetWeights w = zeros(m);
        for (int i : idx) w.bits.at(i) = 1;
        return w;
    }

    int size() const { return static_cast<int>(bits.size()); }
    int count() const {
        int c = 0;
        for (auto b : bits) c += b;
        return c;
    }
    bool any() const { return count() > 0; }
    std::vector<int> indices() const {
        std::vector<int> out;
        for (int i = 0; i < size(); ++i)
            if (bits[i]) out.push_back(i);
        return out;
    }
    Eigen::VectorXd as_vector() const {
        Eigen::VectorXd v(size());
        for (int i = 0; i < size(); ++i) v[i] = bits[i];
        return v;
    }
    bool operator==(const SubsetWeights& o) const { return bits == o.bits; }
};

/// A subset together with its mean-shift MLE and maximized LLR score.
/// `is_null` marks search results where no point carried positive evidence;
/// such results score 0 rather than erroring, so scans can rank across
/// neighborhoods.
struct ScoredSubset {
    SubsetWeights w;
    double beta_star = 0.0;
    double llr = 0.0;
    bool is_null = false;
};

/// w'Ew values at or below this are treated as degenerate (scored -inf
/// inside searches, error from the public entry points).
double degeneracy_tolerance(const Eigen::MatrixXd& precision);

/// Mean-shift MLE beta* = w'E(y - mu) / w'Ew.
double beta_mle(const SubsetWeights& w, const PosteriorGaussian& post, const Eigen::VectorXd& y);

/// Log-likelihood ratio at a fixed shift: beta w'E(y-mu) - beta^2/2 w'Ew.
/// Equals the log ratio of the shifted to unshifted Gaussian densities.
double llr(const SubsetWeights& w, double beta, const PosteriorGaussian& post,
           const Eigen::VectorXd& y);

/// LLR maximized over beta: (w'E(y-mu))^2 / (2 w'Ew), attained at beta*.
ScoredSubset llr_max(const SubsetWeights& w, const PosteriorGaussian& post,
                     const Eigen::VectorXd& y);

namespace detail {

/// Statistic core on precision E and residual r = y - mu. Returns -inf when
/// the quadratic form is degenerate. Shared by searches and scan engines.
double llr_stat(double num, double den, double tol);

}  // namespace detail

}  // namespace gpscan
