#include "gpscan/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "gpscan/linalg.hpp"
#include "gpscan/rng.hpp"

namespace gpscan {

namespace {

void check_dims(const Eigen::MatrixXd& x, const Hyperparams& hp, const char* where) {
    if (x.cols() != hp.lengthscale.size())
        throw InputError(std::string(where) + ": covariate dims do not match lengthscale count");
}

Eigen::MatrixXd noisy_kernel(const Eigen::MatrixXd& x, const Hyperparams& hp) {
    Eigen::MatrixXd s = kernel_matrix(x, x, hp);
    s.diagonal().array() += hp.noise_variance;
    return s;
}

}  // namespace

Hyperparams Hyperparams::defaults_for(const Dataset& data) {
    const int d = data.dim();
    Hyperparams hp;
    hp.lengthscale.resize(d);
    for (int j = 0; j < d; ++j) {
        const double sd = std::sqrt(
            (data.x.col(j).array() - data.x.col(j).mean()).square().sum() /
            std::max<Eigen::Index>(1, data.x.rows() - 1));
        hp.lengthscale[j] = sd > 1e-12 ? sd : 1.0;
    }
    const double var_y =
        (data.y.array() - data.y.mean()).square().sum() / std::max(1, data.size() - 1);
    hp.signal_variance = std::max(var_y / 2.0, 1e-4);
    hp.noise_variance = std::max(var_y / 2.0, 1e-4);
    hp.mean_weights = Eigen::VectorXd::Zero(d);
    hp.mean_bias = data.y.mean();
    return hp;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb,
                              const Hyperparams& hp) {
    check_dims(xa, hp, "kernel_matrix");
    if (xa.cols() != xb.cols()) throw InputError("kernel_matrix: column counts differ");

    // Scaled inputs turn the ARD distance into a plain squared Euclidean one.
    const Eigen::ArrayXd inv_ls = hp.lengthscale.array().inverse();
    Eigen::MatrixXd a = xa.array().rowwise() * inv_ls.transpose();
    Eigen::MatrixXd b = xb.array().rowwise() * inv_ls.transpose();

    const Eigen::VectorXd a2 = a.rowwise().squaredNorm();
    const Eigen::VectorXd b2 = b.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = a2.replicate(1, b.rows()) + b2.transpose().replicate(a.rows(), 1) -
                         2.0 * a * b.transpose();
    d2 = d2.cwiseMax(0.0);  // clamp the rounding negatives at tiny distances
    return hp.signal_variance * (-0.5 * d2.array()).exp();
}

Eigen::VectorXd mean_function(const Eigen::MatrixXd& x, const Hyperparams& hp) {
    check_dims(x, hp, "mean_function");
    return (x * hp.mean_weights).array() + hp.mean_bias;
}

double log_marginal_likelihood(const Dataset& data, const Hyperparams& hp) {
    hp.validate();
    check_dims(data.x, hp, "log_marginal_likelihood");
    const Eigen::Index n = data.x.rows();

    Eigen::MatrixXd s = noisy_kernel(data.x, hp);
    const auto chol = jittered_cholesky(s);
    const Eigen::VectorXd r = data.y - mean_function(data.x, hp);
    const Eigen::VectorXd alpha = chol.llt.solve(r);
    return -0.5 * r.dot(alpha) - 0.5 * log_det_from_cholesky(chol.llt) -
           0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd log_marginal_likelihood_gradient(const Dataset& data, const Hyperparams& hp) {
    hp.validate();
    check_dims(data.x, hp, "log_marginal_likelihood_gradient");
    const Eigen::Index n = data.x.rows();
    const int d = hp.dim();

    const Eigen::MatrixXd k = kernel_matrix(data.x, data.x, hp);
    Eigen::MatrixXd s = k;
    s.diagonal().array() += hp.noise_variance;
    const auto chol = jittered_cholesky(s);

    const Eigen::VectorXd r = data.y - mean_function(data.x, hp);
    const Eigen::VectorXd alpha = chol.llt.solve(r);
    const Eigen::MatrixXd sinv = spd_inverse(chol.llt, n);
    // d lml / d theta = 1/2 tr((alpha alpha' - S^-1) dS/dtheta)
    const Eigen::MatrixXd m = alpha * alpha.transpose() - sinv;

    Eigen::VectorXd grad(2 * d + 3);
    for (int j = 0; j < d; ++j) {
        // dK/dlog ls_j = K .* (delta_j^2 / ls_j^2)
        const Eigen::VectorXd xj = data.x.col(j);
        Eigen::MatrixXd diff2 = xj.replicate(1, n) - xj.transpose().replicate(n, 1);
        diff2 = diff2.array().square();
        const double inv_ls2 = 1.0 / (hp.lengthscale[j] * hp.lengthscale[j]);
        grad[j] = 0.5 * (m.array() * k.array() * diff2.array() * inv_ls2).sum();
    }
    grad[d] = 0.5 * (m.array() * k.array()).sum();           // d/dlog sv
    grad[d + 1] = 0.5 * hp.noise_variance * m.trace();       // d/dlog noise
    grad.segment(d + 2, d) = data.x.transpose() * alpha;     // d/dw
    grad[2 * d + 2] = alpha.sum();                           // d/dbias
    return grad;
}

namespace {

// Packed order: [log ls (D), log sv, log noise, w (D), bias].
Eigen::VectorXd pack(const Hyperparams& hp) {
    const int d = hp.dim();
    Eigen::VectorXd p(2 * d + 3);
    p.head(d) = hp.lengthscale.array().log();
    p[d] = std::log(hp.signal_variance);
    p[d + 1] = std::log(hp.noise_variance);
    p.segment(d + 2, d) = hp.mean_weights;
    p[2 * d + 2] = hp.mean_bias;
    return p;
}

Hyperparams unpack(const Eigen::VectorXd& p, int d) {
    Hyperparams hp;
    // clamp the log-scale block so exp() stays finite under wild line-search steps
    hp.lengthscale = p.head(d).array().min(30.0).max(-30.0).exp();
    hp.signal_variance = std::exp(std::min(30.0, std::max(-30.0, p[d])));
    hp.noise_variance =
        std::max(Hyperparams::kMinNoise, std::exp(std::min(30.0, std::max(-30.0, p[d + 1]))));
    hp.mean_weights = p.segment(d + 2, d);
    hp.mean_bias = p[2 * d + 2];
    return hp;
}

// Gradient ascent with Armijo backtracking. Throws only if the start itself
// cannot be evaluated; inner failures shrink the step instead.
std::pair<Eigen::VectorXd, double> ascend(const Dataset& data, Eigen::VectorXd p,
                                          const FitConfig& cfg, int d) {
    auto value = [&](const Eigen::VectorXd& q) { return log_marginal_likelihood(data, unpack(q, d)); };
    double f = value(p);
    double step = 0.1;
    for (int it = 0; it < cfg.max_iters; ++it) {
        Eigen::VectorXd g;
        try {
            g = log_marginal_likelihood_gradient(data, unpack(p, d));
        } catch (const NumericalError&) {
            break;
        }
        const double gnorm = g.norm();
        if (gnorm < cfg.grad_tol * (1.0 + std::abs(f))) break;

        bool accepted = false;
        double t = step;
        for (int half = 0; half < 40; ++half) {
            const Eigen::VectorXd q = p + t * g;
            double fq;
            try {
                fq = value(q);
            } catch (const NumericalError&) {
                t *= 0.5;
                continue;
            }
            if (fq >= f + 1e-4 * t * gnorm * gnorm) {
                p = q;
                f = fq;
                step = std::min(t * 2.0, 10.0);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
    }
    return {p, f};
}

}  // namespace

Hyperparams fit_hyperparameters(const Dataset& data, const Hyperparams& init,
                                const FitConfig& config) {
    init.validate();
    check_dims(data.x, init, "fit_hyperparameters");
    const int d = init.dim();

    std::optional<Hyperparams> best;
    double best_f = -std::numeric_limits<double>::infinity();
    auto consider = [&](const Hyperparams& hp, double f) {
        if (f > best_f) {
            best_f = f;
            best = hp;
        }
    };

    try {
        consider(init, log_marginal_likelihood(data, init));
    } catch (const NumericalError&) {
        // init itself may be unevaluable; restarts can still succeed
    }

    const int starts = std::max(1, config.restarts + 1);
    int start_failures = 0;
    for (int s = 0; s < starts; ++s) {
        Eigen::VectorXd p0 = pack(init);
        if (s > 0) {
            Rng rng(Rng::derive(config.seed, static_cast<std::uint64_t>(s)));
            for (int j = 0; j < d + 2; ++j) p0[j] += 0.7 * rng.normal();
            for (int j = d + 2; j < 2 * d + 3; ++j) p0[j] += 0.1 * rng.normal();
        }
        try {
            auto [p, f] = ascend(data, p0, config, d);
            consider(unpack(p, d), f);
        } catch (const NumericalError&) {
            ++start_failures;
        }
    }

    if (start_failures == starts)
        throw FitError("fit_hyperparameters: all optimization starts failed", best);
    return *best;
}

PosteriorGaussian PosteriorGaussian::from_moments(Eigen::VectorXd mu, Eigen::MatrixXd sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() != mu.size())
        throw InputError("PosteriorGaussian: dimension mismatch");
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw InputError("PosteriorGaussian: sigma not symmetric within tolerance");
    sigma = ((sigma + sigma.transpose()) * 0.5).eval();

    PosteriorGaussian post;
    post.mu = std::move(mu);
    post.sigma = std::move(sigma);
    const auto chol = jittered_cholesky(post.sigma);
    post.chol = chol.llt.matrixL();
    post.precision = spd_inverse(chol.llt, post.sigma.rows());
    return post;
}

PosteriorGaussian PosteriorGaussian::from_precision(Eigen::VectorXd mu,
                                                    Eigen::MatrixXd precision) {
    if (precision.rows() != precision.cols() || precision.rows() != mu.size())
        throw InputError("PosteriorGaussian: dimension mismatch");
    precision = ((precision + precision.transpose()) * 0.5).eval();

    PosteriorGaussian post;
    post.mu = std::move(mu);
    post.precision = precision;  // kept exactly as given
    const auto chol_e = jittered_cholesky(precision);
    post.sigma = spd_inverse(chol_e.llt, precision.rows());
    Eigen::MatrixXd sig = post.sigma;
    post.chol = jittered_cholesky(sig).llt.matrixL();
    return post;
}

PosteriorGaussian posterior(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                            const Eigen::MatrixXd& x_star, const Hyperparams& hp) {
    hp.validate();
    check_dims(x_star, hp, "posterior");
    if (x_star.rows() < 1) throw InputError("posterior: empty x_star");
    if (x_train.rows() != y_train.size())
        throw InputError("posterior: training rows and responses differ");

    Eigen::MatrixXd sigma = kernel_matrix(x_star, x_star, hp);
    Eigen::VectorXd mu = mean_function(x_star, hp);

    if (x_train.rows() > 0) {
        check_dims(x_train, hp, "posterior");
        Eigen::MatrixXd s = noisy_kernel(x_train, hp);
        const auto chol = jittered_cholesky(s);
        const Eigen::MatrixXd k_cross = kernel_matrix(x_train, x_star, hp);
        const Eigen::VectorXd r = y_train - mean_function(x_train, hp);
        mu += k_cross.transpose() * chol.llt.solve(r);
        sigma -= k_cross.transpose() * chol.llt.solve(k_cross);
        sigma = ((sigma + sigma.transpose()) * 0.5).eval();
    }
    sigma.diagonal().array() += hp.noise_variance;  // observation-space covariance
    return PosteriorGaussian::from_moments(std::move(mu), std::move(sigma));
}

PosteriorGaussian posterior(const Dataset& train, const Eigen::MatrixXd& x_star,
                            const Hyperparams& hp) {
    return posterior(train.x, train.y, x_star, hp);
}

PriorSampler::PriorSampler(const Eigen::MatrixXd& x, const Hyperparams& hp) {
    hp.validate();
    check_dims(x, hp, "sample_prior");
    if (x.rows() < 1) throw InputError("sample_prior: empty x");
    mean_ = mean_function(x, hp);
    Eigen::MatrixXd s = noisy_kernel(x, hp);
    chol_ = jittered_cholesky(s).llt.matrixL();
}

Eigen::VectorXd PriorSampler::draw(std::uint64_t seed) const {
    Rng rng(seed);
    const Eigen::VectorXd z = rng.normal_vector(mean_.size());
    return mean_ + chol_ * z;
}

Eigen::VectorXd sample_prior(const Eigen::MatrixXd& x, const Hyperparams& hp,
                             std::uint64_t seed) {
    return PriorSampler(x, hp).draw(seed);
}

}  // namespace gpscan
