#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "gpscan/gp.hpp"
#include "gpscan/rng.hpp"
#include "test_support.hpp"

using namespace gpscan;
using testsupport::naive_posterior;

namespace {

Eigen::MatrixXd random_points(int n, int d, std::uint64_t seed, double span = 4.0) {
    Rng rng(seed);
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = span * rng.uniform();
    return x;
}

Hyperparams random_hp(int d, std::uint64_t seed) {
    Rng rng(seed);
    Hyperparams hp;
    hp.lengthscale.resize(d);
    for (int j = 0; j < d; ++j) hp.lengthscale[j] = 0.5 + rng.uniform();
    hp.signal_variance = 0.5 + rng.uniform();
    hp.noise_variance = 0.05 + 0.2 * rng.uniform();
    hp.mean_weights.resize(d);
    for (int j = 0; j < d; ++j) hp.mean_weights[j] = rng.normal() * 0.3;
    hp.mean_bias = rng.normal();
    return hp;
}

}  // namespace

TEST_CASE("kernel_matrix basic values") {
    Hyperparams hp = Hyperparams::isotropic(1, 1.0, 1.0, 0.1);
    Eigen::MatrixXd x(1, 1);
    x << 0.0;
    CHECK(kernel_matrix(x, x, hp)(0, 0) == doctest::Approx(1.0));

    Eigen::MatrixXd a(1, 1), b(1, 1);
    a << 0.0;
    b << 1.0;
    CHECK(kernel_matrix(a, b, hp)(0, 0) == doctest::Approx(std::exp(-0.5)));

    b << 100.0;
    CHECK(kernel_matrix(a, b, hp)(0, 0) < 1e-100);
}

TEST_CASE("kernel_matrix rejects dimension mismatch") {
    Hyperparams hp = Hyperparams::isotropic(2, 1.0, 1.0, 0.1);
    Eigen::MatrixXd a = random_points(3, 2, 1);
    Eigen::MatrixXd b = random_points(3, 1, 2);
    CHECK_THROWS_AS(kernel_matrix(a, b, hp), InputError);
    CHECK_THROWS_AS(kernel_matrix(b, b, hp), InputError);
}

TEST_CASE("kernel_matrix is symmetric positive semidefinite") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Hyperparams hp = random_hp(3, seed + 100);
        const Eigen::MatrixXd x = random_points(20, 3, seed);
        const Eigen::MatrixXd k = kernel_matrix(x, x, hp);
        CHECK((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("mean_function affine map") {
    Hyperparams hp = Hyperparams::isotropic(1, 1.0, 1.0, 0.1);
    Eigen::MatrixXd x(2, 1);
    x << 1.0, 2.0;

    CHECK(mean_function(x, hp).isZero());

    hp.mean_weights[0] = 3.0;
    hp.mean_bias = 1.0;
    const Eigen::VectorXd m = mean_function(x, hp);
    CHECK(m[0] == doctest::Approx(4.0));
    CHECK(m[1] == doctest::Approx(7.0));

    hp.mean_weights[0] = 0.0;
    hp.mean_bias = -2.5;
    CHECK((mean_function(x, hp).array() == -2.5).all());
}

TEST_CASE("log_marginal_likelihood standard normal at its mode") {
    // prior mean equals y and K + noise = 1
    Hyperparams hp = Hyperparams::isotropic(1, 1.0, 0.6, 0.4, 1.7);
    Eigen::MatrixXd x(1, 1);
    x << 0.3;
    Eigen::VectorXd y(1);
    y << 1.7;
    const double lml = log_marginal_likelihood(Dataset(x, y), hp);
    CHECK(lml == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("log_marginal_likelihood matches the dense log-density oracle") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const int n = 5 + static_cast<int>(seed) * 3;
        Hyperparams hp = random_hp(2, seed + 11);
        const Eigen::MatrixXd x = random_points(n, 2, seed + 7);
        Rng rng(seed + 3);
        const Eigen::VectorXd y = rng.normal_vector(n);
        Dataset data(x, y);

        Eigen::MatrixXd s = testsupport::naive_rbf(x, x, hp);
        s.diagonal().array() += hp.noise_variance;
        const double oracle = testsupport::dense_log_mnpdf(y, testsupport::naive_mean(x, hp), s);
        CHECK(log_marginal_likelihood(data, hp) == doctest::Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("log_marginal_likelihood decreases as residuals grow") {
    Hyperparams hp = Hyperparams::isotropic(1, 1.0, 1.0, 0.2);
    const Eigen::MatrixXd x = random_points(12, 1, 5);
    Rng rng(9);
    const Eigen::VectorXd r = rng.normal_vector(12);
    double prev = log_marginal_likelihood(Dataset(x, r), hp);
    for (double scale : {2.0, 4.0, 8.0}) {
        const double cur = log_marginal_likelihood(Dataset(x, (scale * r).eval()), hp);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("lml gradient matches central finite differences") {
    const int d = 2, n = 20;
    const Eigen::MatrixXd x = random_points(n, d, 21);
    Hyperparams hp = random_hp(d, 22);
    Rng rng(23);
    Dataset data(x, rng.normal_vector(n));

    // packed order: [log ls, log sv, log noise, w, bias]
    auto packed = [&](const Eigen::VectorXd& p) {
        Hyperparams h = hp;
        for (int j = 0; j < d; ++j) h.lengthscale[j] = std::exp(p[j]);
        h.signal_variance = std::exp(p[d]);
        h.noise_variance = std::exp(p[d + 1]);
        for (int j = 0; j < d; ++j) h.mean_weights[j] = p[d + 2 + j];
        h.mean_bias = p[2 * d + 2];
        return log_marginal_likelihood(data, h);
    };
    Eigen::VectorXd p0(2 * d + 3);
    for (int j = 0; j < d; ++j) p0[j] = std::log(hp.lengthscale[j]);
    p0[d] = std::log(hp.signal_variance);
    p0[d + 1] = std::log(hp.noise_variance);
    for (int j = 0; j < d; ++j) p0[d + 2 + j] = hp.mean_weights[j];
    p0[2 * d + 2] = hp.mean_bias;

    const Eigen::VectorXd g = log_marginal_likelihood_gradient(data, hp);
    const double h = 1e-5;
    for (int j = 0; j < 2 * d + 3; ++j) {
        Eigen::VectorXd lo = p0, hi = p0;
        lo[j] -= h;
        hi[j] += h;
        const double fd = (packed(hi) - packed(lo)) / (2 * h);
        CHECK(g[j] == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("fit_hyperparameters never returns worse than the init") {
    const Eigen::MatrixXd x = random_points(30, 2, 31);
    Hyperparams truth = random_hp(2, 32);
    const Eigen::VectorXd y = sample_prior(x, truth, 33);
    Dataset data(x, y);

    FitConfig cfg;
    cfg.restarts = 2;
    cfg.max_iters = 40;
    cfg.seed = 5;
    for (std::uint64_t s = 0; s < 3; ++s) {
        Hyperparams init = random_hp(2, 40 + s);
        const double before = log_marginal_likelihood(data, init);
        Hyperparams out = fit_hyperparameters(data, init, cfg);
        CHECK(log_marginal_likelihood(data, out) >= before - 1e-9);
    }
}

TEST_CASE("fit_hyperparameters recovers the lengthscale within a factor of two" *
          doctest::timeout(600)) {
    // generate-and-refit at n = 400
    Hyperparams truth = Hyperparams::isotropic(2, 2.0, 1.0, 0.1);
    Eigen::MatrixXd x(400, 2);
    int r = 0;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j, ++r) {
            x(r, 0) = i;
            x(r, 1) = j;
        }

    int ok = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        Dataset data(x, sample_prior(x, truth, 100 + t));
        FitConfig cfg;
        cfg.restarts = 1;
        cfg.max_iters = 50;
        cfg.grad_tol = 1e-3;
        cfg.seed = 200 + t;
        Hyperparams fit = fit_hyperparameters(data, Hyperparams::defaults_for(data), cfg);
        const bool within = (fit.lengthscale.array() >= 1.0).all() &&
                            (fit.lengthscale.array() <= 4.0).all();
        ok += within;
    }
    CHECK(ok >= 16);  // >= 80% of trials
}

TEST_CASE("fit_hyperparameters pushes signal variance down on constant data") {
    Eigen::MatrixXd x = random_points(40, 1, 51);
    Eigen::VectorXd y = Eigen::VectorXd::Constant(40, 3.0);
    Dataset data(x, y);

    Hyperparams init = Hyperparams::isotropic(1, 1.0, 1.0, 2.0, 0.0);
    FitConfig cfg;
    cfg.restarts = 0;
    cfg.max_iters = 150;
    Hyperparams out = fit_hyperparameters(data, init, cfg);
    CHECK(out.signal_variance < 0.1 * out.noise_variance);
}

TEST_CASE("posterior with empty training set returns the prior") {
    Hyperparams hp = random_hp(2, 61);
    const Eigen::MatrixXd xs = random_points(6, 2, 62);
    PosteriorGaussian post = posterior(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), xs, hp);

    Eigen::MatrixXd expected = testsupport::naive_rbf(xs, xs, hp);
    expected.diagonal().array() += hp.noise_variance;
    CHECK((post.mu - testsupport::naive_mean(xs, hp)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((post.sigma - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("posterior interpolates a training point as noise vanishes") {
    Hyperparams hp = Hyperparams::isotropic(1, 1.0, 1.0, 1e-9);
    Eigen::MatrixXd x(4, 1);
    x << 0.0, 1.0, 2.5, 4.0;
    Eigen::VectorXd y(4);
    y << 0.2, -1.0, 0.7, 2.0;
    Eigen::MatrixXd xs(1, 1);
    xs << 2.5;
    PosteriorGaussian post = posterior(x, y, xs, hp);
    CHECK(post.mu[0] == doctest::Approx(0.7).epsilon(1e-4));
}

TEST_CASE("posterior matches the naive dense-inverse oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed * 13 + 1);
        const int n = 5 + static_cast<int>(rng.integer(30));
        const int m = 1 + static_cast<int>(rng.integer(8));
        const int d = 1 + static_cast<int>(rng.integer(3));
        Hyperparams hp = random_hp(d, seed + 71);
        const Eigen::MatrixXd x = random_points(n, d, seed + 72);
        const Eigen::MatrixXd xs = random_points(m, d, seed + 73);
        const Eigen::VectorXd y = rng.normal_vector(n);

        PosteriorGaussian post = posterior(x, y, xs, hp);
        const auto oracle = naive_posterior(x, y, xs, hp);
        const double scale_mu = 1.0 + oracle.mu.cwiseAbs().maxCoeff();
        const double scale_sg = 1.0 + oracle.sigma.cwiseAbs().maxCoeff();
        CHECK((post.mu - oracle.mu).cwiseAbs().maxCoeff() / scale_mu < 1e-8);
        CHECK((post.sigma - oracle.sigma).cwiseAbs().maxCoeff() / scale_sg < 1e-8);
    }
}

TEST_CASE("posterior variance never exceeds the prior variance plus noise") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Hyperparams hp = random_hp(2, seed + 81);
        const Eigen::MatrixXd x = random_points(25, 2, seed + 82);
        const Eigen::MatrixXd xs = random_points(7, 2, seed + 83);
        Rng rng(seed + 84);
        PosteriorGaussian post = posterior(x, rng.normal_vector(25), xs, hp);
        const double cap = hp.signal_variance + hp.noise_variance + 1e-8;
        CHECK(post.sigma.diagonal().maxCoeff() <= cap);
    }
}

TEST_CASE("PosteriorGaussian caches a consistent precision") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        PosteriorGaussian post = testsupport::random_spd_posterior(12, seed + 90, nullptr);
        const Eigen::MatrixXd id = post.precision * post.sigma;
        CHECK((id - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-6);
        const Eigen::MatrixXd rec = post.chol * post.chol.transpose();
        CHECK((rec - post.sigma).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("PosteriorGaussian rejects asymmetric covariance") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 0.5, 0.2, 1.0;
    CHECK_THROWS_AS(PosteriorGaussian::from_moments(Eigen::VectorXd::Zero(2), bad), InputError);
}

TEST_CASE("sample_prior collapses to the mean under degenerate covariance") {
    Hyperparams hp = Hyperparams::isotropic(1, 1.0, 1e-12, 1e-9, 2.0);
    const Eigen::MatrixXd x = random_points(10, 1, 95);
    const Eigen::VectorXd y = sample_prior(x, hp, 7);
    CHECK((y.array() - 2.0).abs().maxCoeff() < 1e-3);
}

TEST_CASE("sample_prior is deterministic in the seed") {
    Hyperparams hp = random_hp(2, 96);
    const Eigen::MatrixXd x = random_points(15, 2, 97);
    CHECK(sample_prior(x, hp, 42) == sample_prior(x, hp, 42));
    CHECK(sample_prior(x, hp, 42) != sample_prior(x, hp, 43));
}

TEST_CASE("sample_prior matches its moments over many draws" * doctest::timeout(120)) {
    Hyperparams hp = Hyperparams::isotropic(2, 1.2, 0.8, 0.2, 1.5);
    const int reps = 10000;

    SUBCASE("mean at a single point") {
        Eigen::MatrixXd x(1, 2);
        x << 0.4, 1.0;
        PriorSampler sampler(x, hp);
        double sum = 0.0;
        for (int i = 0; i < reps; ++i) sum += sampler.draw(i)[0];
        const double sd = std::sqrt(hp.signal_variance + hp.noise_variance);
        CHECK(std::abs(sum / reps - 1.5) < 3.0 * sd / std::sqrt(double(reps)));
    }

    SUBCASE("covariance at five points") {
        const Eigen::MatrixXd x = random_points(5, 2, 98, 2.0);
        Eigen::MatrixXd target = kernel_matrix(x, x, hp);
        target.diagonal().array() += hp.noise_variance;

        PriorSampler sampler(x, hp);
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(5, 5);
        Eigen::VectorXd mean_sum = Eigen::VectorXd::Zero(5);
        std::vector<Eigen::VectorXd> draws;
        draws.reserve(reps);
        for (int i = 0; i < reps; ++i) {
            draws.push_back(sampler.draw(i));
            mean_sum += draws.back();
        }
        const Eigen::VectorXd mean = mean_sum / reps;
        for (const auto& dr : draws) sum += (dr - mean) * (dr - mean).transpose();
        const Eigen::MatrixXd cov = sum / (reps - 1);

        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) {
                const double se = std::sqrt(
                    (target(i, i) * target(j, j) + target(i, j) * target(i, j)) / reps);
                CHECK(std::abs(cov(i, j) - target(i, j)) < 5.0 * se);
            }
    }
}
