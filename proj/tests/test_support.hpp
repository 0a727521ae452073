#pragma once

// Test-only oracles, kept independent of the library's computation paths:
// straight loops, explicit inverses and determinants, no Cholesky shortcuts.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "gpscan/gp.hpp"
#include "gpscan/rng.hpp"
#include "gpscan/scan_statistic.hpp"

namespace testsupport {

inline Eigen::MatrixXd naive_rbf(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb,
                                 const gpscan::Hyperparams& hp) {
    Eigen::MatrixXd k(xa.rows(), xb.rows());
    for (Eigen::Index i = 0; i < xa.rows(); ++i)
        for (Eigen::Index j = 0; j < xb.rows(); ++j) {
            double q = 0.0;
            for (Eigen::Index d = 0; d < xa.cols(); ++d) {
                const double z = (xa(i, d) - xb(j, d)) / hp.lengthscale[d];
                q += z * z;
            }
            k(i, j) = hp.signal_variance * std::exp(-0.5 * q);
        }
    return k;
}

inline Eigen::VectorXd naive_mean(const Eigen::MatrixXd& x, const gpscan::Hyperparams& hp) {
    Eigen::VectorXd m(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double v = hp.mean_bias;
        for (Eigen::Index d = 0; d < x.cols(); ++d) v += x(i, d) * hp.mean_weights[d];
        m[i] = v;
    }
    return m;
}

/// log N(y | mu, sigma) through an explicit inverse and determinant.
inline double dense_log_mnpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                              const Eigen::MatrixXd& sigma) {
    const Eigen::MatrixXd inv = sigma.inverse();
    const Eigen::VectorXd r = y - mu;
    const double logdet = std::log(sigma.determinant());
    return -0.5 * r.dot(inv * r) - 0.5 * logdet -
           0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

struct NaivePosterior {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;  // observation space (noise added)
};

/// Predictive moments by direct matrix inversion.
inline NaivePosterior naive_posterior(const Eigen::MatrixXd& x_train,
                                      const Eigen::VectorXd& y_train,
                                      const Eigen::MatrixXd& x_star,
                                      const gpscan::Hyperparams& hp) {
    NaivePosterior out;
    out.mu = naive_mean(x_star, hp);
    out.sigma = naive_rbf(x_star, x_star, hp);
    if (x_train.rows() > 0) {
        Eigen::MatrixXd s = naive_rbf(x_train, x_train, hp);
        s.diagonal().array() += hp.noise_variance;
        const Eigen::MatrixXd sinv = s.inverse();
        const Eigen::MatrixXd ks = naive_rbf(x_train, x_star, hp);
        out.mu += ks.transpose() * sinv * (y_train - naive_mean(x_train, hp));
        out.sigma -= ks.transpose() * sinv * ks;
    }
    out.sigma.diagonal().array() += hp.noise_variance;
    return out;
}

/// Best subset by plain enumeration of all nonempty masks through llr_max.
inline gpscan::ScoredSubset brute_force_best(const gpscan::PosteriorGaussian& post,
                                             const Eigen::VectorXd& y) {
    const int m = post.dim();
    gpscan::ScoredSubset best;
    best.llr = -1.0;
    for (std::uint64_t mask = 1; mask < (1ULL << m); ++mask) {
        std::vector<std::uint8_t> bits(m, 0);
        for (int i = 0; i < m; ++i) bits[i] = (mask >> i) & 1;
        gpscan::ScoredSubset s = gpscan::llr_max(gpscan::SubsetWeights{bits}, post, y);
        if (s.llr > best.llr) best = s;
    }
    return best;
}

inline double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<int> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int p, int q) { return v[p] < v[q]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    const std::vector<double> ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double num = 0, da = 0, db = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    return num / std::sqrt(da * db);
}

/// Random SPD posterior over scattered points; independent of the library's
/// instance generators.
inline gpscan::PosteriorGaussian random_spd_posterior(int m, std::uint64_t seed,
                                                      Eigen::VectorXd* y_out) {
    gpscan::Rng rng(seed);
    Eigen::MatrixXd a(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = rng.normal();
    Eigen::MatrixXd sigma = a * a.transpose() / m;
    sigma.diagonal().array() += 0.3;
    Eigen::VectorXd mu(m);
    for (int i = 0; i < m; ++i) mu[i] = rng.normal();
    if (y_out) {
        y_out->resize(m);
        for (int i = 0; i < m; ++i) (*y_out)[i] = mu[i] + 2.0 * rng.normal();
    }
    return gpscan::PosteriorGaussian::from_moments(mu, sigma);
}

}  // namespace testsupport
