#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "gpscan/dataset.hpp"

namespace gpscan {

/// RBF (squared-exponential) cross-covariance with per-dimension
/// lengthscales: entry (i,j) = sv * exp(-1/2 sum_d ((xa_id - xb_jd)/ls_d)^2).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb,
                              const Hyperparams& hp);

/// Linear mean: x * mean_weights + mean_bias per row.
Eigen::VectorXd mean_function(const Eigen::MatrixXd& x, const Hyperparams& hp);

/// log N(y | m(x), K(x,x) + noise*I), via Cholesky with jitter repair.
double log_marginal_likelihood(const Dataset& data, const Hyperparams& hp);

/// Gradient of the log marginal likelihood in packed parameter order:
/// [d/dlog ls_1..D, d/dlog sv, d/dlog noise, d/dw_1..D, d/dbias].
Eigen::VectorXd log_marginal_likelihood_gradient(const Dataset& data, const Hyperparams& hp);

struct FitConfig {
    int restarts = 3;      // random restarts in addition to the given init
    int max_iters = 100;   // gradient-ascent iterations per start
    double grad_tol = 1e-5;
    std::uint64_t seed = 0;
};

/// Raised when every optimization start fails numerically. Carries the best
/// hyperparameters evaluated before failure, when any exist.
class FitError : public Error {
public:
    FitError(const std::string& msg, std::optional<Hyperparams> best)
        : Error(msg), best_partial(std::move(best)) {}
    std::optional<Hyperparams> best_partial;
};

/// Maximum-likelihood hyperparameters by multi-start gradient ascent in
/// log-parameter space. The result never scores below the init (up to 1e-9).
Hyperparams fit_hyperparameters(const Dataset& data, const Hyperparams& init,
                                const FitConfig& config = {});

/// Multivariate Gaussian over a point set with its factorizations cached.
/// `sigma` is stored after any jitter repair so that chol * chol' == sigma
/// and precision * sigma ~= I hold as stated.
struct PosteriorGaussian {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;      // symmetric positive definite
    Eigen::MatrixXd chol;       // lower-triangular L, L L' = sigma
    Eigen::MatrixXd precision;  // E = sigma^-1

    static PosteriorGaussian from_moments(Eigen::VectorXd mu, Eigen::MatrixXd sigma);
    static PosteriorGaussian from_precision(Eigen::VectorXd mu, Eigen::MatrixXd precision);

    int dim() const { return static_cast<int>(mu.size()); }
};

/// Predictive distribution at x_star conditioned on (x_train, y_train).
/// With an empty training set this is the prior at x_star. The returned
/// covariance is in observation space: latent posterior covariance plus
/// noise_variance * I, since the scan statistic evaluates observed values.
PosteriorGaussian posterior(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                            const Eigen::MatrixXd& x_star, const Hyperparams& hp);
PosteriorGaussian posterior(const Dataset& train, const Eigen::MatrixXd& x_star,
                            const Hyperparams& hp);

/// One draw from N(m(x), K(x,x) + noise*I); deterministic given the seed.
Eigen::VectorXd sample_prior(const Eigen::MatrixXd& x, const Hyperparams& hp,
                             std::uint64_t seed);

/// Prior sampler with the covariance factored once; draw(seed) matches
/// sample_prior(x, hp, seed) exactly.
class PriorSampler {
public:
    PriorSampler(const Eigen::MatrixXd& x, const Hyperparams& hp);
    Eigen::VectorXd draw(std::uint64_t seed) const;
    Eigen::Index size() const { return mean_.size(); }

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd chol_;
};

}  // namespace gpscan
