#include <doctest.h>

#include "gpscan/scan_statistic.hpp"
#include "test_support.hpp"

using namespace gpscan;

namespace {

PosteriorGaussian identity2() {
    return PosteriorGaussian::from_moments(Eigen::VectorXd::Zero(2),
                                           Eigen::MatrixXd::Identity(2, 2));
}

Eigen::VectorXd y24() {
    Eigen::VectorXd y(2);
    y << 2.0, 4.0;
    return y;
}

SubsetWeights bits(std::vector<std::uint8_t> b) { return SubsetWeights{std::move(b)}; }

}  // namespace

TEST_CASE("beta_mle identity-covariance cases") {
    const PosteriorGaussian post = identity2();
    CHECK(beta_mle(bits({1, 1}), post, y24()) == doctest::Approx(3.0));
    CHECK(beta_mle(bits({0, 1}), post, y24()) == doctest::Approx(4.0));
}

TEST_CASE("beta_mle errors") {
    const PosteriorGaussian post = identity2();
    CHECK_THROWS_AS(beta_mle(bits({0, 0}), post, y24()), UndefinedMleError);
    CHECK_THROWS_AS(beta_mle(bits({1}), post, y24()), InputError);
}

TEST_CASE("beta_mle maximizes the LLR over a dense beta grid") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Eigen::VectorXd y;
        const PosteriorGaussian post = testsupport::random_spd_posterior(5, seed + 7, &y);
        const SubsetWeights w = bits({1, 0, 1, 1, 0});
        const double bstar = beta_mle(w, post, y);
        const double at_star = llr(w, bstar, post, y);
        for (double beta = bstar - 2.0; beta <= bstar + 2.0; beta += 1e-3)
            CHECK(at_star >= llr(w, beta, post, y) - 1e-12);
    }
}

TEST_CASE("llr at fixed beta matches hand values and the MNPDF oracle") {
    const PosteriorGaussian post = identity2();

    CHECK(llr(bits({1, 1}), 0.0, post, y24()) == 0.0);
    CHECK(llr(bits({0, 0}), 2.7, post, y24()) == 0.0);
    CHECK(llr(bits({1, 1}), 3.0, post, y24()) == doctest::Approx(9.0));

    // dense two-MNPDF evaluation of the same ratio
    const Eigen::VectorXd shifted = y24() - 3.0 * bits({1, 1}).as_vector();
    const double oracle = testsupport::dense_log_mnpdf(shifted, post.mu, post.sigma) -
                          testsupport::dense_log_mnpdf(y24(), post.mu, post.sigma);
    CHECK(llr(bits({1, 1}), 3.0, post, y24()) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("llr_max closed form equals the MNPDF log-ratio at beta*") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Rng rng(seed + 1000);
        const int m = 2 + static_cast<int>(rng.integer(19));
        Eigen::VectorXd y;
        const PosteriorGaussian post = testsupport::random_spd_posterior(m, seed + 31, &y);
        std::vector<std::uint8_t> b(m, 0);
        for (int i = 0; i < m; ++i) b[i] = rng.uniform() < 0.5;
        if (SubsetWeights{b}.count() == 0) b[0] = 1;
        const SubsetWeights w{b};

        const ScoredSubset s = llr_max(w, post, y);
        const Eigen::VectorXd shifted = y - s.beta_star * w.as_vector();
        const double oracle = testsupport::dense_log_mnpdf(shifted, post.mu, post.sigma) -
                              testsupport::dense_log_mnpdf(y, post.mu, post.sigma);
        CHECK(s.llr == doctest::Approx(oracle).epsilon(1e-8));
        CHECK(s.llr >= 0.0);
    }
}

TEST_CASE("llr_max identity-covariance cases") {
    const PosteriorGaussian post = identity2();
    CHECK(llr_max(bits({1, 1}), post, y24()).llr == doctest::Approx(9.0));
    CHECK(llr_max(bits({1, 0}), post, y24()).llr == doctest::Approx(2.0));
    CHECK(llr_max(bits({0, 1}), post, y24()).llr == doctest::Approx(8.0));
}

TEST_CASE("llr_max is zero when the residual vanishes") {
    Eigen::VectorXd y;
    const PosteriorGaussian post = testsupport::random_spd_posterior(6, 77, &y);
    for (std::uint64_t mask = 1; mask < 64; ++mask) {
        std::vector<std::uint8_t> b(6, 0);
        for (int i = 0; i < 6; ++i) b[i] = (mask >> i) & 1;
        CHECK(llr_max(SubsetWeights{b}, post, post.mu).llr == doctest::Approx(0.0));
    }
}

TEST_CASE("llr_max dominates random beta probes") {
    Eigen::VectorXd y;
    const PosteriorGaussian post = testsupport::random_spd_posterior(8, 55, &y);
    const SubsetWeights w = bits({1, 1, 0, 0, 1, 0, 1, 0});
    const ScoredSubset s = llr_max(w, post, y);
    Rng rng(56);
    for (int i = 0; i < 100; ++i) {
        const double beta = 10.0 * (rng.uniform() - 0.5);
        CHECK(s.llr >= llr(w, beta, post, y) - 1e-12);
    }
}

TEST_CASE("LLR is invariant to a common shift of y and mu") {
    Eigen::VectorXd y;
    PosteriorGaussian post = testsupport::random_spd_posterior(7, 91, &y);
    const SubsetWeights w = bits({1, 0, 1, 0, 0, 1, 1});
    const ScoredSubset base = llr_max(w, post, y);

    const Eigen::VectorXd mu2 = post.mu.array() + 5.5;
    const Eigen::VectorXd y2 = y.array() + 5.5;
    PosteriorGaussian shifted = PosteriorGaussian::from_moments(mu2, post.sigma);
    const ScoredSubset moved = llr_max(w, shifted, y2);
    CHECK(moved.llr == doctest::Approx(base.llr).epsilon(1e-10));
    CHECK(moved.beta_star == doctest::Approx(base.beta_star).epsilon(1e-10));
}

TEST_CASE("diagonal covariance reduces to the independent-Gaussian statistic") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        Rng rng(seed + 400);
        const int m = 6;
        Eigen::VectorXd vars(m), mu(m), y(m);
        for (int i = 0; i < m; ++i) {
            vars[i] = 0.4 + rng.uniform();
            mu[i] = rng.normal();
            y[i] = mu[i] + 2.0 * rng.normal();
        }
        const PosteriorGaussian post =
            PosteriorGaussian::from_moments(mu, Eigen::MatrixXd(vars.asDiagonal()));

        for (std::uint64_t mask = 1; mask < (1ULL << m); ++mask) {
            std::vector<std::uint8_t> b(m, 0);
            double num = 0.0, den = 0.0;
            for (int i = 0; i < m; ++i) {
                b[i] = (mask >> i) & 1;
                if (b[i]) {
                    num += (y[i] - mu[i]) / vars[i];
                    den += 1.0 / vars[i];
                }
            }
            const double independent = num * num / (2.0 * den);
            CHECK(llr_max(SubsetWeights{b}, post, y).llr ==
                  doctest::Approx(independent).epsilon(1e-9));
        }
    }
}

TEST_CASE("degenerate quadratic form raises") {
    // precision with a near-null direction along (1, 1): w'Ew = 2e-13 while
    // the tolerance sits near 5e-13
    const double t = 1e-13;
    Eigen::MatrixXd e(2, 2);
    e << (1.0 + t) / 2.0, (t - 1.0) / 2.0, (t - 1.0) / 2.0, (1.0 + t) / 2.0;
    const PosteriorGaussian post =
        PosteriorGaussian::from_precision(Eigen::VectorXd::Zero(2), e);
    CHECK_THROWS_AS(llr_max(bits({1, 1}), post, y24()), DegenerateError);
    CHECK_THROWS_AS(beta_mle(bits({1, 1}), post, y24()), DegenerateError);
    // the non-degenerate direction still scores
    CHECK(llr_max(bits({1, 0}), post, y24()).llr > 0.0);
}
