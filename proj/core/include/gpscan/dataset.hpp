#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "gpscan/errors.hpp"

namespace gpscan {

/// Covariates, responses and optional stream labels. Immutable after
/// construction; rows of x and entries of y are index-aligned.
struct Dataset {
    Eigen::MatrixXd x;           // n x D
    Eigen::VectorXd y;           // n
    std::vector<int> stream_id;  // empty, or one label per row

    Dataset(Eigen::MatrixXd x_in, Eigen::VectorXd y_in, std::vector<int> streams = {})
        : x(std::move(x_in)), y(std::move(y_in)), stream_id(std::move(streams)) {
        if (x.rows() < 1) throw InputError("Dataset: need at least one point");
        if (y.size() != x.rows()) throw InputError("Dataset: x rows and y length differ");
        if (!x.allFinite()) throw InputError("Dataset: non-finite covariate");
        if (!y.allFinite()) throw InputError("Dataset: non-finite response");
        if (!stream_id.empty() && static_cast<Eigen::Index>(stream_id.size()) != x.rows())
            throw InputError("Dataset: stream labels and rows differ");
    }

    int size() const { return static_cast<int>(x.rows()); }
    int dim() const { return static_cast<int>(x.cols()); }
};

/// RBF kernel scales, observation noise and linear-mean coefficients.
struct Hyperparams {
    Eigen::VectorXd lengthscale;   // one per input dimension, > 0
    double signal_variance = 1.0;  // > 0
    double noise_variance = 0.1;   // >= kMinNoise
    Eigen::VectorXd mean_weights;  // D
    double mean_bias = 0.0;

    static constexpr double kMinNoise = 1e-10;

    int dim() const { return static_cast<int>(lengthscale.size()); }

    void validate() const {
        if (lengthscale.size() < 1) throw InputError("Hyperparams: empty lengthscale");
        if ((lengthscale.array() <= 0.0).any() || !lengthscale.allFinite())
            throw InputError("Hyperparams: lengthscales must be positive and finite");
        if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
            throw InputError("Hyperparams: signal_variance must be positive");
        if (!(noise_variance >= kMinNoise) || !std::isfinite(noise_variance))
            throw InputError("Hyperparams: noise_variance below jitter floor");
        if (mean_weights.size() != lengthscale.size())
            throw InputError("Hyperparams: mean_weights length must match input dims");
        if (!mean_weights.allFinite() || !std::isfinite(mean_bias))
            throw InputError("Hyperparams: non-finite mean parameters");
    }

    /// Isotropic constructor convenience.
    static Hyperparams isotropic(int dims, double ls, double sv, double noise,
                                 double bias = 0.0) {
        Hyperparams hp;
        hp.lengthscale = Eigen::VectorXd::Constant(dims, ls);
        hp.signal_variance = sv;
        hp.noise_variance = noise;
        hp.mean_weights = Eigen::VectorXd::Zero(dims);
        hp.mean_bias = bias;
        hp.validate();
        return hp;
    }

    /// Data-driven starting point: per-dimension covariate spread for the
    /// lengthscales, response variance split between signal and noise.
    static Hyperparams defaults_for(const Dataset& data);
};

}  // namespace gpscan
