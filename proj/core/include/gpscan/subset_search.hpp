#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "gpscan/scan_statistic.hpp"

namespace gpscan {

/// Which approximation drives the within-neighborhood subset search.
struct SearchMethod {
    enum class Variant { BetaMax, GRQ, Stepwise, Exhaustive };
    enum class Direction { Positive, Negative, Both };

    Variant variant = Variant::BetaMax;
    int max_iters = 10;  // BetaMax rounds; early-stops when w repeats
    Direction direction = Direction::Both;
    int exhaustive_cap = 25;
};

/// Search outcome. round_llrs records the adopted subset's score per round
/// for the iterative method (empty for the others).
struct SearchResult {
    ScoredSubset best;
    std::vector<double> round_llrs;
};

/// Mutually exclusive blocks of points that enter or leave a subset
/// together. Blocks may cover only part of the neighborhood.
struct BlockPartition {
    std::vector<std::vector<int>> blocks;
    void validate(int neighborhood_size) const;
};

/// Per-point priority conditioned on the current subset:
/// beta_max_i = 2 (E(y-mu))_i / (sum_{j != i} 2 w_j E_ji + E_ii).
/// A vanishing denominator yields -inf so the point is never added.
Eigen::VectorXd beta_max_priorities(const SubsetWeights& w, const PosteriorGaussian& post,
                                    const Eigen::VectorXd& y);

/// Evaluate llr_max over the prefixes of an index ordering; return the best.
ScoredSubset prefix_scan(const std::vector<int>& ordering, const PosteriorGaussian& post,
                         const Eigen::VectorXd& y);

/// Iterated conditional-priority search: re-rank by beta_max conditioned on
/// the adopted subset each round, prefix-scan, keep the best round.
SearchResult iterative_beta_max(const PosteriorGaussian& post, const Eigen::VectorXd& y,
                                const SearchMethod& method);

/// Relaxation to a generalized Rayleigh quotient: order points by the
/// mapped top eigenvector of L^-1 (E r r' E) L^-T with 2E = L L', then
/// prefix-scan the ordering.
SearchResult grq_search(const PosteriorGaussian& post, const Eigen::VectorXd& y,
                        const SearchMethod& method);

/// Greedy forward selection on LLR; stops when no single flip improves it.
SearchResult stepwise_search(const PosteriorGaussian& post, const Eigen::VectorXd& y);

/// Enumerate all nonempty subsets (neighborhood size capped). Ties are
/// broken toward smaller subsets, then lexicographically smaller w.
SearchResult exhaustive_search(const PosteriorGaussian& post, const Eigen::VectorXd& y,
                               int cap = 25);

/// Dispatch on method.variant.
SearchResult search_subsets(const PosteriorGaussian& post, const Eigen::VectorXd& y,
                            const SearchMethod& method);

/// Block-level priority: the threshold shift at which including the whole
/// block stops increasing the LLR, conditioned on the current subset.
Eigen::VectorXd block_beta_max_priorities(const BlockPartition& blocks, const SubsetWeights& w,
                                          const PosteriorGaussian& post,
                                          const Eigen::VectorXd& y);

/// Block-constrained variant of the iterative search: whole blocks are
/// included or excluded; points outside every block stay excluded.
SearchResult block_iterative_beta_max(const BlockPartition& blocks,
                                      const PosteriorGaussian& post, const Eigen::VectorXd& y,
                                      const SearchMethod& method);

namespace detail {

/// Residual-space search context: precision E and residual r = y - mu.
/// Scan engines call the cores directly so per-replicate work stays O(k^2).
class SearchContext {
public:
    SearchContext(const Eigen::MatrixXd& precision, const Eigen::VectorXd& residual,
                  const Eigen::MatrixXd* chol_two_e = nullptr);

    int size() const { return static_cast<int>(er_.size()); }
    const Eigen::MatrixXd& E() const { return *e_; }
    const Eigen::VectorXd& er() const { return er_; }
    const Eigen::VectorXd& r() const { return *r_; }
    double tol() const { return tol_; }
    const Eigen::MatrixXd& chol_two_e() const;

private:
    const Eigen::MatrixXd* e_;
    const Eigen::VectorXd* r_;
    Eigen::VectorXd er_;
    double tol_;
    const Eigen::MatrixXd* chol2e_;
    mutable std::optional<Eigen::MatrixXd> chol2e_local_;
};

ScoredSubset canonical_rescore(const SearchContext& ctx, const std::vector<std::uint8_t>& bits);
Eigen::VectorXd beta_max_priorities_core(const SearchContext& ctx,
                                         const std::vector<std::uint8_t>& w);
ScoredSubset prefix_scan_core(const SearchContext& ctx, const std::vector<int>& ordering);
SearchResult iterative_beta_max_core(const SearchContext& ctx, const SearchMethod& method);
SearchResult grq_core(const SearchContext& ctx, const SearchMethod& method);
SearchResult stepwise_core(const SearchContext& ctx);
SearchResult exhaustive_core(const SearchContext& ctx, int cap);
SearchResult search_core(const SearchContext& ctx, const SearchMethod& method);
Eigen::VectorXd block_priorities_core(const SearchContext& ctx, const BlockPartition& blocks,
                                      const std::vector<std::uint8_t>& w);
SearchResult block_iterative_core(const SearchContext& ctx, const BlockPartition& blocks,
                                  const SearchMethod& method);

}  // namespace detail

}  // namespace gpscan
