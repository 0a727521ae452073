#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gpscan/errors.hpp"

namespace gpscan {

/// Cholesky with escalating diagonal jitter. Starts jitter-free; on failure
/// adds 1e-8 x mean(diag), escalating x10 up to 1e-4 x mean(diag), then
/// raises NumericalError. The jitter actually applied is added to `a` so the
/// factor and the stored matrix stay consistent.
struct JitteredCholesky {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
};

inline JitteredCholesky jittered_cholesky(Eigen::MatrixXd& a) {
    JitteredCholesky out;
    out.llt.compute(a);
    if (out.llt.info() == Eigen::Success) return out;

    const double scale = a.diagonal().mean();
    const double base = (scale > 0.0 ? scale : 1.0);
    for (double rel = 1e-8; rel <= 1e-4 + 1e-16; rel *= 10.0) {
        const double extra = rel * base - out.jitter;
        a.diagonal().array() += extra;
        out.jitter = rel * base;
        out.llt.compute(a);
        if (out.llt.info() == Eigen::Success) return out;
    }
    throw NumericalError("Cholesky failed after jitter escalation to 1e-4 x mean diagonal");
}

/// Symmetric positive-definite inverse through an existing factorization.
inline Eigen::MatrixXd spd_inverse(const Eigen::LLT<Eigen::MatrixXd>& llt, Eigen::Index n) {
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    inv = ((inv + inv.transpose()) * 0.5).eval();
    return inv;
}

inline double log_det_from_cholesky(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace gpscan
