#include "gpscan/subset_search.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>

#include "gpscan/linalg.hpp"

namespace gpscan {

namespace detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ScoredSubset null_subset(int m) {
    ScoredSubset s;
    s.w = SubsetWeights::zeros(m);
    s.beta_star = 0.0;
    s.llr = 0.0;
    s.is_null = true;
    return s;
}

/// Evidence-free or degenerate picks collapse to the canonical null result.
ScoredSubset normalize(const SearchContext& ctx, ScoredSubset s) {
    if (!std::isfinite(s.llr) || s.llr <= 0.0 || !s.w.any()) return null_subset(ctx.size());
    return s;
}

// Sort keys descending, ties by index ascending.
std::vector<int> order_by_keys_desc(const Eigen::VectorXd& keys) {
    std::vector<int> idx(keys.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (keys[a] != keys[b]) return keys[a] > keys[b];
        return a < b;
    });
    return idx;
}

// Direction-aware ordering: degenerate markers (-inf priorities) sort last
// in either direction so such points are never pulled in early.
std::vector<int> direction_ordering(const Eigen::VectorXd& priorities, double sign) {
    Eigen::VectorXd keys(priorities.size());
    for (Eigen::Index i = 0; i < priorities.size(); ++i)
        keys[i] = std::isfinite(priorities[i]) ? sign * priorities[i] : -kInf;
    return order_by_keys_desc(keys);
}

}  // namespace

SearchContext::SearchContext(const Eigen::MatrixXd& precision, const Eigen::VectorXd& residual,
                             const Eigen::MatrixXd* chol_two_e)
    : e_(&precision), r_(&residual), chol2e_(chol_two_e) {
    if (precision.rows() != precision.cols() || precision.rows() != residual.size())
        throw InputError("SearchContext: dimension mismatch");
    er_ = precision * residual;
    tol_ = degeneracy_tolerance(precision);
}

const Eigen::MatrixXd& SearchContext::chol_two_e() const {
    if (chol2e_) return *chol2e_;
    if (!chol2e_local_) {
        Eigen::MatrixXd b = 2.0 * (*e_);
        chol2e_local_ = Eigen::MatrixXd(jittered_cholesky(b).llt.matrixL());
    }
    return *chol2e_local_;
}

ScoredSubset canonical_rescore(const SearchContext& ctx, const std::vector<std::uint8_t>& bits) {
    SubsetWeights w{bits};
    if (!w.any()) return null_subset(ctx.size());
    const Eigen::VectorXd wv = w.as_vector();
    const Eigen::VectorXd ew = ctx.E() * wv;
    const double den = wv.dot(ew);
    const double num = ctx.er().dot(wv);
    ScoredSubset s;
    s.w = std::move(w);
    s.llr = llr_stat(num, den, ctx.tol());
    s.beta_star = den > ctx.tol() ? num / den : 0.0;
    return s;
}

Eigen::VectorXd beta_max_priorities_core(const SearchContext& ctx,
                                         const std::vector<std::uint8_t>& w) {
    const int m = ctx.size();
    Eigen::VectorXd wv(m);
    for (int i = 0; i < m; ++i) wv[i] = w[i];
    const Eigen::VectorXd ew = ctx.E() * wv;
    const double den_tol = 1e-14 * std::max(1e-300, ctx.E().trace() / std::max(1, m));

    Eigen::VectorXd pr(m);
    for (int i = 0; i < m; ++i) {
        const double eii = ctx.E()(i, i);
        const double den = 2.0 * ew[i] - 2.0 * wv[i] * eii + eii;
        pr[i] = std::abs(den) <= den_tol ? -kInf : 2.0 * ctx.er()[i] / den;
    }
    return pr;
}

ScoredSubset prefix_scan_core(const SearchContext& ctx, const std::vector<int>& ordering) {
    const int m = ctx.size();
    {
        std::vector<std::uint8_t> seen(m, 0);
        if (static_cast<int>(ordering.size()) != m)
            throw InputError("prefix_scan: ordering is not a permutation");
        for (int i : ordering) {
            if (i < 0 || i >= m || seen[i]) throw InputError("prefix_scan: ordering is not a permutation");
            seen[i] = 1;
        }
    }

    Eigen::VectorXd ew = Eigen::VectorXd::Zero(m);
    double num = 0.0, den = 0.0;
    double best_llr = -kInf;
    int best_len = 0;
    for (int step = 0; step < m; ++step) {
        const int p = ordering[step];
        num += ctx.er()[p];
        den += 2.0 * ew[p] + ctx.E()(p, p);
        ew += ctx.E().col(p);
        const double score = llr_stat(num, den, ctx.tol());
        if (score > best_llr) {
            best_llr = score;
            best_len = step + 1;
        }
    }
    if (!std::isfinite(best_llr)) return null_subset(m);

    std::vector<std::uint8_t> bits(m, 0);
    for (int i = 0; i < best_len; ++i) bits[ordering[i]] = 1;
    ScoredSubset s = canonical_rescore(ctx, bits);
    if (s.llr <= 0.0) s.is_null = true;
    return s;
}

SearchResult iterative_beta_max_core(const SearchContext& ctx, const SearchMethod& method) {
    const int m = ctx.size();
    // Each round conditions the priorities on the best subset seen so far and
    // adopts the round's best prefix only when it improves, so the running
    // score is non-decreasing and the loop stops when w repeats.
    auto run_direction = [&](double sign) {
        SearchResult out;
        std::vector<std::uint8_t> w(m, 0);
        ScoredSubset best = null_subset(m);
        for (int round = 0; round < std::max(1, method.max_iters); ++round) {
            const Eigen::VectorXd pr = beta_max_priorities_core(ctx, w);
            const std::vector<int> ordering = direction_ordering(pr, sign);
            ScoredSubset prefix = prefix_scan_core(ctx, ordering);
            if (prefix.llr > best.llr) best = prefix;
            out.round_llrs.push_back(best.llr);
            if (best.w.bits == w) break;
            w = best.w.bits;
        }
        out.best = std::move(best);
        return out;
    };

    SearchResult result;
    switch (method.direction) {
        case SearchMethod::Direction::Positive:
            result = run_direction(+1.0);
            break;
        case SearchMethod::Direction::Negative:
            result = run_direction(-1.0);
            break;
        case SearchMethod::Direction::Both: {
            SearchResult pos = run_direction(+1.0);
            SearchResult neg = run_direction(-1.0);
            result = neg.best.llr > pos.best.llr ? std::move(neg) : std::move(pos);
            break;
        }
    }
    result.best = normalize(ctx, std::move(result.best));
    return result;
}

SearchResult grq_core(const SearchContext& ctx, const SearchMethod& method) {
    const int m = ctx.size();
    SearchResult out;

    const Eigen::MatrixXd& l = ctx.chol_two_e();
    // A' = L^-1 (E r)(E r)' L^-T; u spans its range.
    const Eigen::VectorXd u =
        l.triangularView<Eigen::Lower>().solve(ctx.er());
    if (u.norm() <= 0.0) {
        out.best = null_subset(m);
        return out;
    }
    const Eigen::MatrixXd a_prime = u * u.transpose();

    // Power iteration for the dominant eigenvector of A'.
    Eigen::VectorXd v = Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(double(m)));
    int basis_try = 0;
    for (int it = 0; it < 64; ++it) {
        Eigen::VectorXd next = a_prime * v;
        const double norm = next.norm();
        if (norm <= 1e-300) {
            // started orthogonal to the range; move to a basis vector
            if (basis_try >= m) break;
            v.setZero();
            v[basis_try++] = 1.0;
            continue;
        }
        next /= norm;
        if ((next - v).norm() < 1e-14 || (next + v).norm() < 1e-14) {
            v = next;
            break;
        }
        v = next;
    }

    Eigen::VectorXd w_max = l.transpose().triangularView<Eigen::Upper>().solve(v);
    if (w_max.dot(ctx.r()) < 0.0) w_max = -w_max;  // sign toward the residuals

    ScoredSubset best = null_subset(m);
    auto consider = [&](const std::vector<int>& ordering) {
        ScoredSubset s = prefix_scan_core(ctx, ordering);
        if (s.llr > best.llr || (best.is_null && !s.is_null)) best = s;
    };
    if (method.direction != SearchMethod::Direction::Negative)
        consider(order_by_keys_desc(w_max));
    if (method.direction != SearchMethod::Direction::Positive)
        consider(order_by_keys_desc((-w_max).eval()));

    out.best = normalize(ctx, std::move(best));
    return out;
}

SearchResult stepwise_core(const SearchContext& ctx) {
    const int m = ctx.size();
    std::vector<std::uint8_t> w(m, 0);
    Eigen::VectorXd ew = Eigen::VectorXd::Zero(m);
    double num = 0.0, den = 0.0;
    double cur = 0.0;  // empty subset scores zero

    for (int added = 0; added < m; ++added) {
        int best_j = -1;
        double best_score = cur;
        double best_num = 0.0, best_den = 0.0;
        for (int j = 0; j < m; ++j) {
            if (w[j]) continue;
            const double nj = num + ctx.er()[j];
            const double dj = den + 2.0 * ew[j] + ctx.E()(j, j);
            const double score = llr_stat(nj, dj, ctx.tol());
            if (score > best_score) {
                best_score = score;
                best_j = j;
                best_num = nj;
                best_den = dj;
            }
        }
        if (best_j < 0) break;
        w[best_j] = 1;
        num = best_num;
        den = best_den;
        ew += ctx.E().col(best_j);
        cur = best_score;
    }

    SearchResult out;
    out.best = normalize(ctx, canonical_rescore(ctx, w));
    return out;
}

namespace {

// (popcount, lexicographic bits) tie order among equal canonical scores
bool tie_before(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    int ca = 0, cb = 0;
    for (auto x : a) ca += x;
    for (auto x : b) cb += x;
    if (ca != cb) return ca < cb;
    return a < b;
}

}  // namespace

SearchResult exhaustive_core(const SearchContext& ctx, int cap) {
    const int m = ctx.size();
    if (m > cap)
        throw InputError("exhaustive_search: neighborhood size " + std::to_string(m) +
                         " exceeds the cap of " + std::to_string(cap));

    std::vector<std::uint8_t> bits(m, 0);
    Eigen::VectorXd ew = Eigen::VectorXd::Zero(m);
    double num = 0.0, den = 0.0;

    std::optional<ScoredSubset> best;  // canonically scored
    const std::uint64_t total = (1ULL << m) - 1ULL;
    for (std::uint64_t i = 1; i <= total; ++i) {
        const int j = std::countr_zero(i);  // bit flipped between gray(i-1) and gray(i)
        if (!bits[j]) {
            num += ctx.er()[j];
            den += 2.0 * ew[j] + ctx.E()(j, j);
            ew += ctx.E().col(j);
            bits[j] = 1;
        } else {
            num -= ctx.er()[j];
            den -= 2.0 * ew[j] - ctx.E()(j, j);
            ew -= ctx.E().col(j);
            bits[j] = 0;
        }
        const double rough = llr_stat(num, den, ctx.tol());
        if (!std::isfinite(rough)) continue;
        // Canonical comparison for anything near the incumbent; the rough
        // incremental score can drift by a few ulp over the enumeration.
        const double margin = best ? 1e-9 * (1.0 + std::abs(best->llr)) : kInf;
        if (!best || rough > best->llr - margin) {
            ScoredSubset cand = canonical_rescore(ctx, bits);
            if (!best || cand.llr > best->llr ||
                (cand.llr == best->llr && tie_before(cand.w.bits, best->w.bits))) {
                best = std::move(cand);
            }
        }
    }

    SearchResult out;
    out.best = normalize(ctx, best ? std::move(*best) : null_subset(m));
    return out;
}

SearchResult search_core(const SearchContext& ctx, const SearchMethod& method) {
    switch (method.variant) {
        case SearchMethod::Variant::BetaMax:
            return iterative_beta_max_core(ctx, method);
        case SearchMethod::Variant::GRQ:
            return grq_core(ctx, method);
        case SearchMethod::Variant::Stepwise:
            return stepwise_core(ctx);
        case SearchMethod::Variant::Exhaustive:
            return exhaustive_core(ctx, method.exhaustive_cap);
    }
    throw InputError("search_core: unknown variant");
}

Eigen::VectorXd block_priorities_core(const SearchContext& ctx, const BlockPartition& blocks,
                                      const std::vector<std::uint8_t>& w) {
    const int m = ctx.size();
    const int nb = static_cast<int>(blocks.blocks.size());
    Eigen::VectorXd wv(m);
    for (int i = 0; i < m; ++i) wv[i] = w[i];
    const Eigen::VectorXd ew = ctx.E() * wv;
    const double den_tol = 1e-14 * std::max(1e-300, ctx.E().trace() / std::max(1, m));

    // Threshold shift at which the block's total contribution crosses zero:
    // summed numerators over summed per-point denominators, with the
    // within-block cross terms counted once and outside-subset terms via w.
    Eigen::VectorXd pr(nb);
    for (int b = 0; b < nb; ++b) {
        const auto& blk = blocks.blocks[b];
        double num = 0.0, den = 0.0;
        for (int i : blk) {
            num += 2.0 * ctx.er()[i];
            double outside = 2.0 * ew[i];
            double within = 0.0;
            for (int k : blk) {
                if (k == i) continue;
                outside -= 2.0 * wv[k] * ctx.E()(k, i);  // members of B excluded from the w sum
                within += ctx.E()(k, i);
            }
            outside -= 2.0 * wv[i] * ctx.E()(i, i);
            den += outside + ctx.E()(i, i) + within;
        }
        pr[b] = std::abs(den) <= den_tol ? -kInf : num / den;
    }
    return pr;
}

SearchResult block_iterative_core(const SearchContext& ctx, const BlockPartition& blocks,
                                  const SearchMethod& method) {
    const int m = ctx.size();
    const int nb = static_cast<int>(blocks.blocks.size());

    auto bits_for = [&](const std::vector<std::uint8_t>& included_blocks) {
        std::vector<std::uint8_t> bits(m, 0);
        for (int b = 0; b < nb; ++b)
            if (included_blocks[b])
                for (int i : blocks.blocks[b]) bits[i] = 1;
        return bits;
    };

    auto block_prefix_scan = [&](const std::vector<int>& order) {
        std::vector<std::uint8_t> inc(nb, 0);
        ScoredSubset best = null_subset(m);
        std::vector<std::uint8_t> best_blocks(nb, 0);
        for (int step = 0; step < nb; ++step) {
            inc[order[step]] = 1;
            ScoredSubset s = canonical_rescore(ctx, bits_for(inc));
            if (s.llr > best.llr) {
                best = s;
                best_blocks = inc;
            }
        }
        return std::make_pair(best, best_blocks);
    };

    auto run_direction = [&](double sign) {
        std::vector<std::uint8_t> included(nb, 0);
        std::vector<std::uint8_t> best_blocks(nb, 0);
        ScoredSubset best = null_subset(m);
        for (int round = 0; round < std::max(1, method.max_iters); ++round) {
            const Eigen::VectorXd pr = block_priorities_core(ctx, blocks, bits_for(included));
            const std::vector<int> order = direction_ordering(pr, sign);
            auto [cand, cand_blocks] = block_prefix_scan(order);
            if (cand.llr > best.llr) {
                best = cand;
                best_blocks = cand_blocks;
            }
            if (best_blocks == included) break;
            included = best_blocks;
        }
        return best;
    };

    SearchResult out;
    switch (method.direction) {
        case SearchMethod::Direction::Positive:
            out.best = run_direction(+1.0);
            break;
        case SearchMethod::Direction::Negative:
            out.best = run_direction(-1.0);
            break;
        case SearchMethod::Direction::Both: {
            ScoredSubset pos = run_direction(+1.0);
            ScoredSubset neg = run_direction(-1.0);
            out.best = neg.llr > pos.llr ? neg : pos;
            break;
        }
    }
    out.best = normalize(ctx, std::move(out.best));
    return out;
}

}  // namespace detail

void BlockPartition::validate(int neighborhood_size) const {
    std::vector<std::uint8_t> seen(neighborhood_size, 0);
    for (const auto& blk : blocks) {
        if (blk.empty()) throw InputError("BlockPartition: empty block");
        for (int i : blk) {
            if (i < 0 || i >= neighborhood_size)
                throw InputError("BlockPartition: index out of range");
            if (seen[i]) throw InputError("BlockPartition: blocks are not disjoint");
            seen[i] = 1;
        }
    }
}

namespace {

Eigen::VectorXd residual_of(const PosteriorGaussian& post, const Eigen::VectorXd& y) {
    if (y.size() != post.mu.size()) throw InputError("subset_search: y and posterior dims differ");
    return y - post.mu;
}

}  // namespace

Eigen::VectorXd beta_max_priorities(const SubsetWeights& w, const PosteriorGaussian& post,
                                    const Eigen::VectorXd& y) {
    if (w.size() != post.dim()) throw InputError("beta_max_priorities: w and posterior dims differ");
    const Eigen::VectorXd r = residual_of(post, y);
    detail::SearchContext ctx(post.precision, r);
    return detail::beta_max_priorities_core(ctx, w.bits);
}

ScoredSubset prefix_scan(const std::vector<int>& ordering, const PosteriorGaussian& post,
                         const Eigen::VectorXd& y) {
    const Eigen::VectorXd r = residual_of(post, y);
    detail::SearchContext ctx(post.precision, r);
    return detail::prefix_scan_core(ctx, ordering);
}

SearchResult iterative_beta_max(const PosteriorGaussian& post, const Eigen::VectorXd& y,
                                const SearchMethod& method) {
    const Eigen::VectorXd r = residual_of(post, y);
    detail::SearchContext ctx(post.precision, r);
    return detail::iterative_beta_max_core(ctx, method);
}

SearchResult grq_search(const PosteriorGaussian& post, const Eigen::VectorXd& y,
                        const SearchMethod& method) {
    const Eigen::VectorXd r = residual_of(post, y);
    detail::SearchContext ctx(post.precision, r);
    return detail::grq_core(ctx, method);
}

SearchResult stepwise_search(const PosteriorGaussian& post, const Eigen::VectorXd& y) {
    const Eigen::VectorXd r = residual_of(post, y);
    detail::SearchContext ctx(post.precision, r);
    return detail::stepwise_core(ctx);
}

SearchResult exhaustive_search(const PosteriorGaussian& post, const Eigen::VectorXd& y, int cap) {
    const Eigen::VectorXd r = residual_of(post, y);
    detail::SearchContext ctx(post.precision, r);
    return detail::exhaustive_core(ctx, cap);
}

SearchResult search_subsets(const PosteriorGaussian& post, const Eigen::VectorXd& y,
                            const SearchMethod& method) {
    const Eigen::VectorXd r = residual_of(post, y);
    detail::SearchContext ctx(post.precision, r);
    return detail::search_core(ctx, method);
}

Eigen::VectorXd block_beta_max_priorities(const BlockPartition& blocks, const SubsetWeights& w,
                                          const PosteriorGaussian& post,
                                          const Eigen::VectorXd& y) {
    blocks.validate(post.dim());
    if (w.size() != post.dim())
        throw InputError("block_beta_max_priorities: w and posterior dims differ");
    const Eigen::VectorXd r = residual_of(post, y);
    detail::SearchContext ctx(post.precision, r);
    return detail::block_priorities_core(ctx, blocks, w.bits);
}

SearchResult block_iterative_beta_max(const BlockPartition& blocks,
                                      const PosteriorGaussian& post, const Eigen::VectorXd& y,
                                      const SearchMethod& method) {
    blocks.validate(post.dim());
    const Eigen::VectorXd r = residual_of(post, y);
    detail::SearchContext ctx(post.precision, r);
    return detail::block_iterative_core(ctx, blocks, method);
}

}  // namespace gpscan
