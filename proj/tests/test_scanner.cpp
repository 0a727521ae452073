#include <doctest.h>

#include <set>

#include "gpscan/experiments.hpp"
#include "gpscan/scanner.hpp"
#include "test_support.hpp"

using namespace gpscan;

namespace {

Hyperparams synth_hp() { return Hyperparams::isotropic(2, 1.5, 1.0, 0.1, 2.0); }

Dataset small_grid(int side, std::uint64_t seed) {
    return synth_generate(side, synth_hp(), seed);
}

SearchMethod beta_max_both() {
    SearchMethod m;
    m.variant = SearchMethod::Variant::BetaMax;
    m.direction = SearchMethod::Direction::Both;
    return m;
}

}  // namespace

TEST_CASE("build_neighborhoods basics") {
    SUBCASE("k = 1 keeps each point alone") {
        const Dataset data = small_grid(4, 1);
        for (const auto& nb : build_neighborhoods(data.x, 1)) {
            CHECK(nb.members == std::vector<int>{nb.seed_index});
            CHECK(nb.k == 1);
        }
    }
    SUBCASE("interior point of an equally spaced line grabs both sides") {
        Eigen::MatrixXd x(5, 1);
        x << 0.0, 1.0, 2.0, 3.0, 4.0;
        const auto nbs = build_neighborhoods(x, 3);
        std::set<int> got(nbs[2].members.begin(), nbs[2].members.end());
        CHECK(got == std::set<int>{1, 2, 3});
        CHECK(nbs[2].members.front() == 2);  // seed first
    }
    SUBCASE("k exceeding n is refused") {
        Eigen::MatrixXd x(3, 1);
        x << 0, 1, 2;
        CHECK_THROWS_AS(build_neighborhoods(x, 4), InputError);
    }
}

TEST_CASE("build_neighborhoods matches a brute-force standardized distance sort") {
    Rng rng(12);
    Eigen::MatrixXd x(40, 2);
    for (int i = 0; i < 40; ++i) {
        x(i, 0) = 100.0 * rng.uniform();   // wide dimension
        x(i, 1) = 0.01 * rng.uniform();    // narrow dimension
    }
    const int k = 7;
    const auto nbs = build_neighborhoods(x, k);

    // standardize with the sample standard deviation, then sort by distance
    Eigen::VectorXd sd(2);
    for (int j = 0; j < 2; ++j) {
        const double mean = x.col(j).mean();
        sd[j] = std::sqrt((x.col(j).array() - mean).square().sum() / (40 - 1));
    }
    for (int i = 0; i < 40; ++i) {
        std::vector<std::pair<double, int>> d;
        for (int j = 0; j < 40; ++j) {
            double dist = 0.0;
            for (int c = 0; c < 2; ++c) {
                const double z = (x(j, c) - x(i, c)) / sd[c];
                dist += z * z;
            }
            d.push_back({dist, j});
        }
        std::sort(d.begin(), d.end());
        std::vector<int> expect;
        for (int j = 0; j < k; ++j) expect.push_back(d[j].second);
        CHECK(nbs[i].members == expect);
    }
}

TEST_CASE("gpss hold-out posterior agrees with direct conditioning") {
    const Dataset data = small_grid(5, 21);  // 25 points
    const Hyperparams hp = synth_hp();
    GpssEngine engine(data.x, hp, 6, beta_max_both());

    for (int id : {0, 7, 24}) {
        const Neighborhood& nb = engine.neighborhoods()[id];
        const PosteriorGaussian fast = engine.holdout_posterior(id, data.y);

        // direct route: posterior conditioned on the complement
        std::vector<int> outside;
        for (int i = 0; i < data.size(); ++i)
            if (std::find(nb.members.begin(), nb.members.end(), i) == nb.members.end())
                outside.push_back(i);
        Eigen::MatrixXd x_out(outside.size(), 2), x_in(nb.members.size(), 2);
        Eigen::VectorXd y_out(outside.size());
        for (std::size_t a = 0; a < outside.size(); ++a) {
            x_out.row(a) = data.x.row(outside[a]);
            y_out[a] = data.y[outside[a]];
        }
        for (std::size_t a = 0; a < nb.members.size(); ++a)
            x_in.row(a) = data.x.row(nb.members[a]);
        const PosteriorGaussian direct = posterior(x_out, y_out, x_in, hp);

        CHECK((fast.mu - direct.mu).cwiseAbs().maxCoeff() < 1e-7);
        CHECK((fast.sigma - direct.sigma).cwiseAbs().maxCoeff() < 1e-7);
    }
}

TEST_CASE("gpns on exact-mean data scores zero everywhere") {
    const Dataset base = small_grid(5, 31);
    const Hyperparams hp = synth_hp();
    const Eigen::VectorXd y = mean_function(base.x, hp);
    Dataset data(base.x, y);

    const ScanOutput out = gpns(data, hp, 4);
    for (const auto& r : out.results) CHECK(r.subset.llr == doctest::Approx(0.0));
}

TEST_CASE("gpns evaluates exactly n * k_max neighborhoods") {
    const Dataset data = small_grid(5, 41);
    const int k_max = 6;
    const ScanOutput out = gpns(data, synth_hp(), k_max);
    CHECK(out.stats.posterior_inferences == data.size() * k_max);
    CHECK(static_cast<int>(out.results.size()) == data.size() * k_max);
}

TEST_CASE("gpns rejects k_max = n") {
    const Dataset data = small_grid(3, 43);
    CHECK_THROWS_AS(gpns(data, synth_hp(), 9), InputError);
    CHECK_NOTHROW(gpns(data, synth_hp(), 8));
}

TEST_CASE("gpns finds an injected circular cluster") {
    int hits = 0;
    const int trials = 10;
    for (int t = 0; t < trials; ++t) {
        Dataset base = synth_generate(12, default_synth_hyperparams(), 500 + t);
        InjectionSpec spec;
        spec.factor = 2.5;
        spec.density = 1.0;
        spec.neighborhood_size = 8;
        spec.seed = 600 + t;
        const InjectionResult inj = inject_anomaly(base, spec);

        const ScanOutput out = gpns(inj.data, default_synth_hyperparams(), 10);
        const auto detected = out.results.front().included_indices();
        const auto metrics = evaluate_detection(detected, inj.truth, true);
        hits += metrics.recall >= 0.8;
    }
    CHECK(hits >= 8);
}

TEST_CASE("gpss with exhaustive dominates gpns and every other method per neighborhood") {
    const Dataset base = small_grid(5, 51);
    InjectionSpec spec;
    spec.factor = 2.0;
    spec.density = 0.5;
    spec.neighborhood_size = 8;
    spec.seed = 52;
    const InjectionResult inj = inject_anomaly(base, spec);
    const Hyperparams hp = synth_hp();
    const int k = 8;

    SearchMethod exhaustive;
    exhaustive.variant = SearchMethod::Variant::Exhaustive;
    const ScanOutput best = gpss(inj.data, hp, k, exhaustive);

    // same-k gpns top never beats the subset search top
    GpnsEngine gpns_engine(inj.data.x, hp, k);
    const ScanOutput whole = gpns_engine.scan(inj.data.y);
    double gpns_top_at_k = 0.0;
    for (const auto& r : whole.results)
        if (r.neighborhood.k == k) {
            gpns_top_at_k = r.subset.llr;
            break;
        }
    CHECK(best.results.front().subset.llr >= gpns_top_at_k - 1e-9);

    // per-neighborhood dominance over the approximate searches
    for (auto variant : {SearchMethod::Variant::BetaMax, SearchMethod::Variant::GRQ,
                         SearchMethod::Variant::Stepwise}) {
        SearchMethod m;
        m.variant = variant;
        const ScanOutput approx = gpss(inj.data, hp, k, m);
        // align by seed index
        std::vector<double> exact_by_seed(base.size()), approx_by_seed(base.size());
        for (const auto& r : best.results) exact_by_seed[r.neighborhood.seed_index] = r.subset.llr;
        for (const auto& r : approx.results)
            approx_by_seed[r.neighborhood.seed_index] = r.subset.llr;
        for (int i = 0; i < base.size(); ++i)
            CHECK(approx_by_seed[i] <= exact_by_seed[i] + 1e-9);
    }
}

TEST_CASE("gpss on exact-mean data scores zero everywhere") {
    const Dataset base = small_grid(5, 61);
    const Hyperparams hp = synth_hp();
    Dataset data(base.x, mean_function(base.x, hp));
    const ScanOutput out = gpss(data, hp, 6, beta_max_both());
    for (const auto& r : out.results) {
        CHECK(r.subset.llr == doctest::Approx(0.0));
        CHECK(r.subset.is_null);
    }
}

TEST_CASE("ranked output is ordered and deterministically tie-broken") {
    const Dataset data = small_grid(6, 71);
    const ScanOutput out = gpss(data, synth_hp(), 8, beta_max_both());
    for (std::size_t i = 1; i < out.results.size(); ++i) {
        const auto& a = out.results[i - 1];
        const auto& b = out.results[i];
        const bool ordered =
            a.subset.llr > b.subset.llr ||
            (a.subset.llr == b.subset.llr &&
             a.neighborhood.seed_index < b.neighborhood.seed_index);
        CHECK(ordered);
    }
}

TEST_CASE("multi_stream_posterior assembles block diagonals") {
    Eigen::VectorXd y1, y2;
    const PosteriorGaussian a = testsupport::random_spd_posterior(2, 81, &y1);
    const PosteriorGaussian b = testsupport::random_spd_posterior(2, 82, &y2);

    SUBCASE("single stream passes through") {
        const PosteriorGaussian j = multi_stream_posterior({a});
        CHECK(j.sigma == a.sigma);
        CHECK(j.mu == a.mu);
    }

    SUBCASE("two 2x2 blocks make a 4x4 with zero off-blocks") {
        const PosteriorGaussian j = multi_stream_posterior({a, b});
        CHECK(j.dim() == 4);
        CHECK(j.sigma.block(0, 0, 2, 2) == a.sigma);
        CHECK(j.sigma.block(2, 2, 2, 2) == b.sigma);
        CHECK(j.sigma.block(0, 2, 2, 2).isZero(0.0));
        CHECK(j.precision.block(0, 0, 2, 2) == a.precision);
        CHECK(j.precision.block(2, 2, 2, 2) == b.precision);
        CHECK(j.precision.block(2, 0, 2, 2).isZero(0.0));
    }

    SUBCASE("a subset confined to one stream scores exactly like the single stream") {
        const PosteriorGaussian j = multi_stream_posterior({a, b});
        Eigen::VectorXd y(4);
        y << y1[0], y1[1], y2[0], y2[1];
        const ScoredSubset joint =
            llr_max(SubsetWeights{{1, 1, 0, 0}}, j, y);
        const ScoredSubset single = llr_max(SubsetWeights{{1, 1}}, a, y1);
        CHECK(joint.llr == doctest::Approx(single.llr).epsilon(1e-12));
        CHECK(joint.beta_star == doctest::Approx(single.beta_star).epsilon(1e-12));
    }
}

TEST_CASE("multi-stream scan of a single stream equals gpss") {
    const Dataset data = small_grid(5, 91);
    const Hyperparams hp = synth_hp();
    const int k = 6;
    const ScanOutput single = gpss(data, hp, k, beta_max_both());
    const ScanOutput multi = multi_stream_scan({data}, {hp}, k, beta_max_both());

    REQUIRE(single.results.size() == multi.results.size());
    for (std::size_t i = 0; i < single.results.size(); ++i) {
        CHECK(single.results[i].subset.llr == multi.results[i].subset.llr);
        CHECK(single.results[i].neighborhood.seed_index ==
              multi.results[i].neighborhood.seed_index);
        CHECK(single.results[i].included_indices(0) == multi.results[i].included_indices(0));
    }
}

TEST_CASE("joint scan of a shared anomaly beats each marginal scan") {
    int wins = 0;
    const int trials = 8;
    for (int t = 0; t < trials; ++t) {
        const Hyperparams hp = default_synth_hyperparams();
        Dataset s1 = synth_generate(10, hp, 1000 + t);
        Dataset s2 = synth_generate(10, hp, 2000 + t);
        InjectionSpec spec;
        spec.factor = 1.6;
        spec.density = 1.0;
        spec.neighborhood_size = 8;
        spec.seed = 3000 + t;
        const InjectionResult inj1 = inject_anomaly(s1, spec);
        Eigen::VectorXd y2 = s2.y;
        for (int i : inj1.truth) y2[i] *= spec.factor;
        Dataset s2_inj(s2.x, y2);

        const int k = 8;
        const double joint =
            multi_stream_scan({inj1.data, s2_inj}, {hp, hp}, k, beta_max_both())
                .results.front()
                .subset.llr;
        const double m1 = gpss(inj1.data, hp, k, beta_max_both()).results.front().subset.llr;
        const double m2 = gpss(s2_inj, hp, k, beta_max_both()).results.front().subset.llr;
        wins += (joint > m1 && joint > m2);
    }
    CHECK(wins >= 6);
}

TEST_CASE("single-stream anomaly dominates the joint subset membership") {
    int ok = 0;
    const int trials = 8;
    for (int t = 0; t < trials; ++t) {
        const Hyperparams hp = default_synth_hyperparams();
        Dataset s1 = synth_generate(10, hp, 4000 + t);
        Dataset s2 = synth_generate(10, hp, 5000 + t);
        InjectionSpec spec;
        spec.factor = 2.5;
        spec.density = 1.0;
        spec.neighborhood_size = 8;
        spec.seed = 6000 + t;
        const InjectionResult inj = inject_anomaly(s1, spec);

        const auto out = multi_stream_scan({inj.data, s2}, {hp, hp}, 8, beta_max_both());
        const auto& members = out.results.front().members;
        int from_affected = 0;
        for (const auto& m : members) from_affected += m.stream == 0;
        ok += members.empty() ? 0 : (from_affected > 0.8 * members.size());
    }
    CHECK(ok >= 6);
}

TEST_CASE("streams missing points at some sites still scan") {
    const Hyperparams hp = synth_hp();
    Dataset s1 = small_grid(4, 95);  // 16 sites
    // second stream observes only the first 6 sites
    Dataset s2(s1.x.topRows(6), s1.y.head(6));
    const auto out = multi_stream_scan({s1, s2}, {hp, hp}, 5, beta_max_both());
    CHECK(out.results.size() == 16);  // one per site
    for (const auto& r : out.results)
        for (const auto& m : r.members)
            if (m.stream == 1) CHECK(m.index < 6);
}

TEST_CASE("deduplicate_results suppresses heavy overlap") {
    auto make = [](double llr, std::vector<int> idx) {
        ScanResult r;
        r.subset.llr = llr;
        for (int i : idx) r.members.push_back(MemberRef{0, i});
        return r;
    };
    const std::vector<ScanResult> ranked = {
        make(10.0, {1, 2, 3, 4}),
        make(9.0, {2, 3, 4, 5}),   // 3/4 shared with the first: suppressed
        make(8.0, {7, 8, 9, 10}),  // disjoint: kept
        make(7.0, {1, 7, 11, 12}), // 2/4 shared at most: kept
    };
    const auto kept = deduplicate_results(ranked, 0.5);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].subset.llr == 10.0);
    CHECK(kept[1].subset.llr == 8.0);
    CHECK(kept[2].subset.llr == 7.0);
}
