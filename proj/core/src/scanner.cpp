#include "gpscan/scanner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "gpscan/gp.hpp"
#include "gpscan/linalg.hpp"

namespace gpscan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd standardization_scales(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    Eigen::VectorXd scales(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double sd = 0.0;
        if (n > 1) {
            const double mean = x.col(j).mean();
            sd = std::sqrt((x.col(j).array() - mean).square().sum() / double(n - 1));
        }
        scales[j] = sd > 1e-12 ? sd : 1.0;  // constant dimensions carry no distance
    }
    return scales;
}

// Shared state for hold-out posteriors at fixed covariates: with
// S = K + noise*I factored once and P = S^-1, the posterior of a
// neighborhood T given everything outside it has precision P[T,T] and mean
// y_T - (P[T,T])^-1 q_T where q = P (y - m). Responses only enter through q.
struct HoldoutCache {
    Eigen::VectorXd mean;     // m(x)
    Eigen::MatrixXd full_precision;  // P

    HoldoutCache(const Eigen::MatrixXd& x, const Hyperparams& hp) {
        hp.validate();
        if (x.cols() != hp.lengthscale.size())
            throw InputError("scan: covariate dims do not match hyperparams");
        mean = mean_function(x, hp);
        Eigen::MatrixXd s = kernel_matrix(x, x, hp);
        s.diagonal().array() += hp.noise_variance;
        const auto chol = jittered_cholesky(s);
        full_precision = spd_inverse(chol.llt, x.rows());
    }

    Eigen::VectorXd q_vector(const Eigen::VectorXd& y) const {
        if (y.size() != mean.size()) throw InputError("scan: y length does not match covariates");
        return full_precision * (y - mean);
    }
};

void rank_results(std::vector<ScanResult>& results) {
    std::stable_sort(results.begin(), results.end(), [](const ScanResult& a, const ScanResult& b) {
        if (a.subset.llr != b.subset.llr) return a.subset.llr > b.subset.llr;
        if (a.neighborhood.seed_index != b.neighborhood.seed_index)
            return a.neighborhood.seed_index < b.neighborhood.seed_index;
        return a.neighborhood.k < b.neighborhood.k;
    });
}

std::vector<double> row_coords(const Eigen::MatrixXd& x, int row) {
    std::vector<double> out(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) out[j] = x(row, j);
    return out;
}

}  // namespace

std::vector<Neighborhood> build_neighborhoods(const Eigen::MatrixXd& x, int k) {
    const int n = static_cast<int>(x.rows());
    if (k < 1) throw InputError("build_neighborhoods: k must be positive");
    if (k > n) throw InputError("build_neighborhoods: k exceeds the number of points");

    const Eigen::VectorXd scales = standardization_scales(x);
    Eigen::MatrixXd xs = x.array().rowwise() / scales.transpose().array();

    std::vector<Neighborhood> out;
    out.reserve(n);
    std::vector<std::pair<double, int>> dist(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            dist[j] = {(xs.row(j) - xs.row(i)).squaredNorm(), j};
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        Neighborhood nb;
        nb.seed_index = i;
        nb.k = k;
        nb.members.reserve(k);
        for (int j = 0; j < k; ++j) nb.members.push_back(dist[j].second);
        out.push_back(std::move(nb));
    }
    return out;
}

// ---------------------------------------------------------------------------
// GPSS engine

struct GpssEngine::Impl {
    Eigen::MatrixXd x;
    HoldoutCache cache;
    SearchMethod method;
    bool diagonalize;
    std::vector<Neighborhood> neighborhoods;

    struct Block {
        Eigen::MatrixXd precision;  // E = P[T,T] (diagonalized for the baseline)
        Eigen::MatrixXd sigma;      // E^-1, maps q_T to the residual
        Eigen::MatrixXd chol_two_e; // L with L L' = 2E, for the GRQ route
    };
    std::vector<Block> blocks;

    Impl(Eigen::MatrixXd x_in, const Hyperparams& hp, int k, SearchMethod m, bool diag)
        : x(std::move(x_in)), cache(x, hp), method(m), diagonalize(diag) {
        const int n = static_cast<int>(x.rows());
        if (k > n - 1)
            throw InputError("gpss: k must leave at least one conditioning point outside");
        neighborhoods = build_neighborhoods(x, k);
        blocks.reserve(neighborhoods.size());
        for (const auto& nb : neighborhoods) {
            Block b;
            b.precision = cache.full_precision(nb.members, nb.members);
            Eigen::MatrixXd e = b.precision;
            const auto chol = jittered_cholesky(e);
            b.sigma = spd_inverse(chol.llt, e.rows());
            if (diagonalize) {
                // independent baseline: keep the marginal variances only
                const Eigen::VectorXd marginals = b.sigma.diagonal();
                b.sigma = marginals.asDiagonal();
                b.precision = marginals.cwiseInverse().asDiagonal();
            }
            Eigen::MatrixXd two_e = 2.0 * b.precision;
            b.chol_two_e = Eigen::MatrixXd(jittered_cholesky(two_e).llt.matrixL());
            blocks.push_back(std::move(b));
        }
    }
};

GpssEngine::GpssEngine(Eigen::MatrixXd x, const Hyperparams& hp, int k, SearchMethod method,
                       bool diagonalize)
    : impl_(std::make_unique<Impl>(std::move(x), hp, k, method, diagonalize)) {}
GpssEngine::~GpssEngine() = default;
GpssEngine::GpssEngine(GpssEngine&&) noexcept = default;
GpssEngine& GpssEngine::operator=(GpssEngine&&) noexcept = default;

int GpssEngine::n() const { return static_cast<int>(impl_->x.rows()); }
const std::vector<Neighborhood>& GpssEngine::neighborhoods() const {
    return impl_->neighborhoods;
}

PosteriorGaussian GpssEngine::holdout_posterior(int neighborhood_id,
                                                const Eigen::VectorXd& y) const {
    const auto& nb = impl_->neighborhoods.at(neighborhood_id);
    const Eigen::VectorXd q = impl_->cache.q_vector(y);
    Eigen::VectorXd q_t(nb.members.size());
    Eigen::VectorXd y_t(nb.members.size());
    for (std::size_t a = 0; a < nb.members.size(); ++a) {
        q_t[a] = q[nb.members[a]];
        y_t[a] = y[nb.members[a]];
    }
    const auto& blk = impl_->blocks[neighborhood_id];
    return PosteriorGaussian::from_precision(y_t - blk.sigma * q_t, blk.precision);
}

ScanOutput GpssEngine::scan(const Eigen::VectorXd& y) const {
    const Eigen::VectorXd q = impl_->cache.q_vector(y);

    ScanOutput out;
    out.results.reserve(impl_->neighborhoods.size());
    for (std::size_t id = 0; id < impl_->neighborhoods.size(); ++id) {
        const auto& nb = impl_->neighborhoods[id];
        const auto& blk = impl_->blocks[id];
        Eigen::VectorXd q_t(nb.members.size());
        for (std::size_t a = 0; a < nb.members.size(); ++a) q_t[a] = q[nb.members[a]];
        const Eigen::VectorXd r = blk.sigma * q_t;

        detail::SearchContext ctx(blk.precision, r, &blk.chol_two_e);
        SearchResult sr = detail::search_core(ctx, impl_->method);
        ++out.stats.posterior_inferences;
        ++out.stats.neighborhoods_scanned;

        ScanResult res;
        res.neighborhood = nb;
        res.subset = std::move(sr.best);
        res.seed_coords = row_coords(impl_->x, nb.seed_index);
        for (int local : res.subset.w.indices())
            res.members.push_back(MemberRef{0, nb.members[local]});
        out.results.push_back(std::move(res));
    }
    rank_results(out.results);
    return out;
}

double GpssEngine::max_llr(const Eigen::VectorXd& y) const {
    ScanOutput out = scan(y);
    return out.results.empty() ? 0.0 : out.results.front().subset.llr;
}

ScanOutput gpss(const Dataset& data, const Hyperparams& hp, int k, const SearchMethod& method) {
    GpssEngine engine(data.x, hp, k, method);
    return engine.scan(data.y);
}

// ---------------------------------------------------------------------------
// GPNS engine

struct GpnsEngine::Impl {
    Eigen::MatrixXd x;
    HoldoutCache cache;
    int k_max;

    // For w = all-ones the LLR needs only q sums and the precision total:
    // num = sum_T q, den = 1'E1 with E = P[T,T].
    struct Entry {
        Neighborhood nb;
        double den;
    };
    std::vector<Entry> entries;

    Impl(Eigen::MatrixXd x_in, const Hyperparams& hp, int k_max_in)
        : x(std::move(x_in)), cache(x, hp), k_max(k_max_in) {
        const int n = static_cast<int>(x.rows());
        if (k_max < 1) throw InputError("gpns: k_max must be positive");
        if (k_max > n - 1)
            throw InputError("gpns: k_max must leave at least one conditioning point outside");

        // One k-NN pass at k_max covers every smaller k by prefix.
        const std::vector<Neighborhood> widest = build_neighborhoods(x, k_max);
        entries.reserve(static_cast<std::size_t>(n) * k_max);
        for (int k = 1; k <= k_max; ++k) {
            for (int i = 0; i < n; ++i) {
                Entry e;
                e.nb.seed_index = i;
                e.nb.k = k;
                e.nb.members.assign(widest[i].members.begin(), widest[i].members.begin() + k);
                e.den = cache.full_precision(e.nb.members, e.nb.members).sum();
                entries.push_back(std::move(e));
            }
        }
    }
};

GpnsEngine::GpnsEngine(Eigen::MatrixXd x, const Hyperparams& hp, int k_max)
    : impl_(std::make_unique<Impl>(std::move(x), hp, k_max)) {}
GpnsEngine::~GpnsEngine() = default;
GpnsEngine::GpnsEngine(GpnsEngine&&) noexcept = default;
GpnsEngine& GpnsEngine::operator=(GpnsEngine&&) noexcept = default;

int GpnsEngine::n() const { return static_cast<int>(impl_->x.rows()); }
std::int64_t GpnsEngine::neighborhood_count() const {
    return static_cast<std::int64_t>(impl_->entries.size());
}

ScanOutput GpnsEngine::scan(const Eigen::VectorXd& y) const {
    const Eigen::VectorXd q = impl_->cache.q_vector(y);
    const double tol = degeneracy_tolerance(impl_->cache.full_precision);

    ScanOutput out;
    out.results.reserve(impl_->entries.size());
    for (const auto& e : impl_->entries) {
        ++out.stats.posterior_inferences;
        double num = 0.0;
        for (int idx : e.nb.members) num += q[idx];
        if (!(e.den > tol)) {
            ++out.stats.skipped;
            continue;
        }
        ++out.stats.neighborhoods_scanned;

        ScanResult res;
        res.neighborhood = e.nb;
        res.seed_coords = row_coords(impl_->x, e.nb.seed_index);
        res.subset.w = SubsetWeights::ones(e.nb.k);
        res.subset.beta_star = num / e.den;
        res.subset.llr = num * num / (2.0 * e.den);
        for (int idx : e.nb.members) res.members.push_back(MemberRef{0, idx});
        out.results.push_back(std::move(res));
    }
    rank_results(out.results);
    return out;
}

double GpnsEngine::max_llr(const Eigen::VectorXd& y) const {
    ScanOutput out = scan(y);
    return out.results.empty() ? 0.0 : out.results.front().subset.llr;
}

ScanOutput gpns(const Dataset& data, const Hyperparams& hp, int k_max) {
    GpnsEngine engine(data.x, hp, k_max);
    return engine.scan(data.y);
}

// ---------------------------------------------------------------------------
// Multi-stream

PosteriorGaussian multi_stream_posterior(const std::vector<PosteriorGaussian>& posteriors) {
    if (posteriors.empty()) throw InputError("multi_stream_posterior: no streams");
    if (posteriors.size() == 1) return posteriors.front();

    Eigen::Index total = 0;
    for (const auto& p : posteriors) total += p.mu.size();

    Eigen::VectorXd mu(total);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(total, total);
    Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(total, total);
    Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(total, total);
    Eigen::Index at = 0;
    for (const auto& p : posteriors) {
        const Eigen::Index m = p.mu.size();
        mu.segment(at, m) = p.mu;
        sigma.block(at, at, m, m) = p.sigma;
        precision.block(at, at, m, m) = p.precision;
        chol.block(at, at, m, m) = p.chol;
        at += m;
    }

    PosteriorGaussian joint;
    joint.mu = std::move(mu);
    joint.sigma = std::move(sigma);
    joint.precision = std::move(precision);
    joint.chol = std::move(chol);
    return joint;
}

struct MultiStreamEngine::Impl {
    SearchMethod method;
    int n_streams = 0;
    Eigen::MatrixXd site_x;               // deduplicated coordinates, first-seen order
    std::vector<Neighborhood> site_neighborhoods;

    struct StreamState {
        HoldoutCache cache;
        std::vector<int> point_site;              // row -> site id
        std::vector<std::vector<int>> site_points;  // site id -> rows
        Eigen::Index n_points;
        StreamState(const Eigen::MatrixXd& x, const Hyperparams& hp)
            : cache(x, hp), n_points(x.rows()) {}
    };
    std::vector<StreamState> streams;

    struct NeighborhoodBlocks {
        // per stream: member rows (may be empty) and that stream's block
        std::vector<std::vector<int>> rows;
        std::vector<Eigen::MatrixXd> precision;
        std::vector<Eigen::MatrixXd> sigma;
        Eigen::MatrixXd joint_precision;
        Eigen::MatrixXd joint_chol_two_e;
        int total = 0;
    };
    std::vector<NeighborhoodBlocks> blocks;

    Impl(const std::vector<Dataset>& data, const std::vector<Hyperparams>& hps, int k,
         SearchMethod m)
        : method(m), n_streams(static_cast<int>(data.size())) {
        if (data.empty()) throw InputError("multi_stream_scan: no streams");
        if (hps.size() != data.size())
            throw InputError("multi_stream_scan: one Hyperparams per stream required");
        const Eigen::Index dims = data.front().x.cols();
        for (const auto& d : data)
            if (d.x.cols() != dims)
                throw InputError("multi_stream_scan: streams must share covariate dimensionality");

        // Deduplicate coordinate sites across streams (exact row match).
        std::map<std::vector<double>, int> site_ids;
        std::vector<std::vector<double>> rows_in_order;
        std::vector<std::vector<std::vector<int>>> per_stream_site_points(data.size());
        std::vector<std::vector<int>> per_stream_point_site(data.size());
        for (std::size_t s = 0; s < data.size(); ++s) {
            per_stream_point_site[s].resize(data[s].x.rows());
            for (Eigen::Index i = 0; i < data[s].x.rows(); ++i) {
                std::vector<double> key(dims);
                for (Eigen::Index j = 0; j < dims; ++j) key[j] = data[s].x(i, j);
                auto [it, inserted] = site_ids.try_emplace(key, static_cast<int>(rows_in_order.size()));
                if (inserted) rows_in_order.push_back(key);
                per_stream_point_site[s][i] = it->second;
            }
        }
        const int n_sites = static_cast<int>(rows_in_order.size());
        site_x.resize(n_sites, dims);
        for (int i = 0; i < n_sites; ++i)
            for (Eigen::Index j = 0; j < dims; ++j) site_x(i, j) = rows_in_order[i][j];
        for (std::size_t s = 0; s < data.size(); ++s) {
            per_stream_site_points[s].assign(n_sites, {});
            for (Eigen::Index i = 0; i < data[s].x.rows(); ++i)
                per_stream_site_points[s][per_stream_point_site[s][i]].push_back(
                    static_cast<int>(i));
        }

        if (k > n_sites) throw InputError("multi_stream_scan: k exceeds the site count");
        site_neighborhoods = build_neighborhoods(site_x, k);

        streams.reserve(data.size());
        for (std::size_t s = 0; s < data.size(); ++s) {
            StreamState st(data[s].x, hps[s]);
            st.point_site = std::move(per_stream_point_site[s]);
            st.site_points = std::move(per_stream_site_points[s]);
            streams.push_back(std::move(st));
        }

        blocks.reserve(site_neighborhoods.size());
        for (const auto& nb : site_neighborhoods) {
            NeighborhoodBlocks b;
            b.rows.resize(data.size());
            b.precision.resize(data.size());
            b.sigma.resize(data.size());
            for (std::size_t s = 0; s < data.size(); ++s) {
                for (int site : nb.members)
                    for (int row : streams[s].site_points[site]) b.rows[s].push_back(row);
                const int m = static_cast<int>(b.rows[s].size());
                if (m == 0) continue;  // stream contributes nothing here
                b.precision[s] = streams[s].cache.full_precision(b.rows[s], b.rows[s]);
                Eigen::MatrixXd e = b.precision[s];
                const auto chol = jittered_cholesky(e);
                b.sigma[s] = spd_inverse(chol.llt, m);
                b.total += m;
            }
            b.joint_precision = Eigen::MatrixXd::Zero(b.total, b.total);
            int at = 0;
            for (std::size_t s = 0; s < data.size(); ++s) {
                const int m = static_cast<int>(b.rows[s].size());
                if (m == 0) continue;
                b.joint_precision.block(at, at, m, m) = b.precision[s];
                at += m;
            }
            if (b.total > 0) {
                Eigen::MatrixXd two_e = 2.0 * b.joint_precision;
                b.joint_chol_two_e = Eigen::MatrixXd(jittered_cholesky(two_e).llt.matrixL());
            }
            blocks.push_back(std::move(b));
        }
    }
};

MultiStreamEngine::MultiStreamEngine(const std::vector<Dataset>& streams,
                                     const std::vector<Hyperparams>& hps, int k,
                                     SearchMethod method)
    : impl_(std::make_unique<Impl>(streams, hps, k, method)) {}
MultiStreamEngine::~MultiStreamEngine() = default;
MultiStreamEngine::MultiStreamEngine(MultiStreamEngine&&) noexcept = default;
MultiStreamEngine& MultiStreamEngine::operator=(MultiStreamEngine&&) noexcept = default;

int MultiStreamEngine::site_count() const { return static_cast<int>(impl_->site_x.rows()); }
int MultiStreamEngine::stream_count() const { return impl_->n_streams; }

ScanOutput MultiStreamEngine::scan(const std::vector<Eigen::VectorXd>& ys) const {
    if (static_cast<int>(ys.size()) != impl_->n_streams)
        throw InputError("multi_stream_scan: one response vector per stream required");
    std::vector<Eigen::VectorXd> qs(ys.size());
    for (std::size_t s = 0; s < ys.size(); ++s) {
        if (ys[s].size() != impl_->streams[s].n_points)
            throw InputError("multi_stream_scan: response length mismatch");
        qs[s] = impl_->streams[s].cache.q_vector(ys[s]);
    }

    ScanOutput out;
    out.results.reserve(impl_->site_neighborhoods.size());
    for (std::size_t id = 0; id < impl_->site_neighborhoods.size(); ++id) {
        const auto& nb = impl_->site_neighborhoods[id];
        const auto& blk = impl_->blocks[id];
        if (blk.total == 0) {
            ++out.stats.skipped;
            continue;
        }
        ++out.stats.posterior_inferences;
        ++out.stats.neighborhoods_scanned;

        Eigen::VectorXd r(blk.total);
        std::vector<MemberRef> local_to_ref(blk.total);
        int at = 0;
        for (int s = 0; s < impl_->n_streams; ++s) {
            const auto& rows = blk.rows[s];
            if (rows.empty()) continue;
            Eigen::VectorXd q_t(rows.size());
            for (std::size_t a = 0; a < rows.size(); ++a) q_t[a] = qs[s][rows[a]];
            r.segment(at, rows.size()) = blk.sigma[s] * q_t;
            for (std::size_t a = 0; a < rows.size(); ++a)
                local_to_ref[at + static_cast<int>(a)] = MemberRef{s, rows[a]};
            at += static_cast<int>(rows.size());
        }

        detail::SearchContext ctx(blk.joint_precision, r, &blk.joint_chol_two_e);
        SearchResult sr = detail::search_core(ctx, impl_->method);

        ScanResult res;
        res.neighborhood = nb;
        res.subset = std::move(sr.best);
        res.seed_coords = row_coords(impl_->site_x, nb.seed_index);
        for (int local : res.subset.w.indices()) res.members.push_back(local_to_ref[local]);
        out.results.push_back(std::move(res));
    }
    rank_results(out.results);
    return out;
}

double MultiStreamEngine::max_llr(const std::vector<Eigen::VectorXd>& ys) const {
    ScanOutput out = scan(ys);
    return out.results.empty() ? 0.0 : out.results.front().subset.llr;
}

ScanOutput multi_stream_scan(const std::vector<Dataset>& streams,
                             const std::vector<Hyperparams>& hps, int k,
                             const SearchMethod& method) {
    MultiStreamEngine engine(streams, hps, k, method);
    std::vector<Eigen::VectorXd> ys;
    ys.reserve(streams.size());
    for (const auto& d : streams) ys.push_back(d.y);
    return engine.scan(ys);
}

std::vector<ScanResult> deduplicate_results(const std::vector<ScanResult>& ranked,
                                            double overlap) {
    std::vector<ScanResult> kept;
    for (const auto& cand : ranked) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (cand.members.empty()) break;
            int shared = 0;
            for (const auto& m : cand.members)
                if (std::find(k.members.begin(), k.members.end(), m) != k.members.end())
                    ++shared;
            if (static_cast<double>(shared) / cand.members.size() > overlap) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(cand);
    }
    return kept;
}

}  // namespace gpscan
