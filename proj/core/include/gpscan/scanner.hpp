#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "gpscan/subset_search.hpp"

namespace gpscan {

/// A point plus its k-1 nearest neighbors under standardized Euclidean
/// distance, distance ties broken by index.
struct Neighborhood {
    int seed_index = 0;
    std::vector<int> members;  // sorted by (distance, index); seed first
    int k = 0;
};

/// One neighborhood per row of x; exact brute-force k-NN on covariates
/// standardized by their per-dimension sample standard deviation.
std::vector<Neighborhood> build_neighborhoods(const Eigen::MatrixXd& x, int k);

/// Point reference as a (stream, within-stream row) pair. Single-stream
/// use stream 0 throughout.
struct MemberRef {
    int stream = 0;
    int index = 0;
    bool operator==(const MemberRef&) const = default;
};

/// One scanned neighborhood with its best subset and the included points.
struct ScanResult {
    Neighborhood neighborhood;
    ScoredSubset subset;
    std::vector<MemberRef> members;   // included points, neighborhood order
    std::vector<double> seed_coords;  // covariates of the seed point or site

    /// Included row indices for stream `stream` (all of them when single-stream).
    std::vector<int> included_indices(int stream = 0) const {
        std::vector<int> out;
        for (const auto& m : members)
            if (m.stream == stream) out.push_back(m.index);
        return out;
    }
};

struct ScanStats {
    std::int64_t posterior_inferences = 0;  // one per scanned neighborhood
    std::int64_t neighborhoods_scanned = 0;
    std::int64_t skipped = 0;  // degenerate or empty-conditioning neighborhoods
};

struct ScanOutput {
    std::vector<ScanResult> results;  // LLR descending; ties by seed, then k
    ScanStats stats;
};

/// Fixed-size-k subset scan (one neighborhood per point, searched subsets).
/// The engine factors the full training covariance once; rescanning new
/// responses at the same covariates costs O(n^2) plus the subset searches,
/// which is what makes randomization replicates cheap.
///
/// `diagonalize` drops the posterior's off-diagonal covariance before both
/// search and scoring: the independent-Gaussian baseline scan.
class GpssEngine {
public:
    GpssEngine(Eigen::MatrixXd x, const Hyperparams& hp, int k, SearchMethod method,
               bool diagonalize = false);
    ~GpssEngine();
    GpssEngine(GpssEngine&&) noexcept;
    GpssEngine& operator=(GpssEngine&&) noexcept;

    ScanOutput scan(const Eigen::VectorXd& y) const;
    double max_llr(const Eigen::VectorXd& y) const;

    const std::vector<Neighborhood>& neighborhoods() const;
    /// Hold-out posterior of one neighborhood for a given response vector
    /// (precision route; exposed so tests can audit the conditioning).
    PosteriorGaussian holdout_posterior(int neighborhood_id, const Eigen::VectorXd& y) const;
    int n() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Neighborhood scan over every size k = 1..k_max with w = all-ones.
class GpnsEngine {
public:
    GpnsEngine(Eigen::MatrixXd x, const Hyperparams& hp, int k_max);
    ~GpnsEngine();
    GpnsEngine(GpnsEngine&&) noexcept;
    GpnsEngine& operator=(GpnsEngine&&) noexcept;

    ScanOutput scan(const Eigen::VectorXd& y) const;
    double max_llr(const Eigen::VectorXd& y) const;
    int n() const;
    std::int64_t neighborhood_count() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

ScanOutput gpns(const Dataset& data, const Hyperparams& hp, int k_max);
ScanOutput gpss(const Dataset& data, const Hyperparams& hp, int k, const SearchMethod& method);

/// Concatenated means and block-diagonal covariance/precision from
/// independently inferred per-stream posteriors.
PosteriorGaussian multi_stream_posterior(const std::vector<PosteriorGaussian>& posteriors);

/// Joint scan over several streams sharing a coordinate space. Neighborhoods
/// are built on the deduplicated coordinate sites; each neighborhood holds
/// every stream's points at those sites, scanned against a block-diagonal
/// posterior assembled from per-stream hold-out inference.
class MultiStreamEngine {
public:
    MultiStreamEngine(const std::vector<Dataset>& streams, const std::vector<Hyperparams>& hps,
                      int k, SearchMethod method);
    ~MultiStreamEngine();
    MultiStreamEngine(MultiStreamEngine&&) noexcept;
    MultiStreamEngine& operator=(MultiStreamEngine&&) noexcept;

    ScanOutput scan(const std::vector<Eigen::VectorXd>& ys) const;
    double max_llr(const std::vector<Eigen::VectorXd>& ys) const;
    int site_count() const;
    int stream_count() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

ScanOutput multi_stream_scan(const std::vector<Dataset>& streams,
                             const std::vector<Hyperparams>& hps, int k,
                             const SearchMethod& method);

/// Reporting helper: drop results sharing more than `overlap` of their
/// included members with a higher-ranked kept result.
std::vector<ScanResult> deduplicate_results(const std::vector<ScanResult>& ranked,
                                            double overlap = 0.5);

}  // namespace gpscan
