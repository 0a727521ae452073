#include "gpscan/scan_statistic.hpp"

#include <limits>

namespace gpscan {

namespace {

void check_subset(const SubsetWeights& w, const PosteriorGaussian& post,
                  const Eigen::VectorXd& y, const char* where) {
    if (w.size() != post.dim() || y.size() != post.dim())
        throw InputError(std::string(where) + ": dimension mismatch");
}

}  // namespace

double degeneracy_tolerance(const Eigen::MatrixXd& precision) {
    const double m = static_cast<double>(precision.rows());
    return 1e-12 * precision.trace() / std::max(1.0, m);
}

double detail::llr_stat(double num, double den, double tol) {
    if (den <= tol) return -std::numeric_limits<double>::infinity();
    return num * num / (2.0 * den);
}

double beta_mle(const SubsetWeights& w, const PosteriorGaussian& post, const Eigen::VectorXd& y) {
    check_subset(w, post, y, "beta_mle");
    if (!w.any()) throw UndefinedMleError("beta_mle: all-zero subset has no mean-shift MLE");

    const Eigen::VectorXd wv = w.as_vector();
    const Eigen::VectorXd ew = post.precision * wv;
    const double den = wv.dot(ew);
    if (den <= degeneracy_tolerance(post.precision))
        throw DegenerateError("beta_mle: w'Ew at or below degeneracy tolerance");
    const double num = ew.dot(y - post.mu);
    return num / den;
}

double llr(const SubsetWeights& w, double beta, const PosteriorGaussian& post,
           const Eigen::VectorXd& y) {
    check_subset(w, post, y, "llr");
    if (!w.any()) return 0.0;
    const Eigen::VectorXd wv = w.as_vector();
    const Eigen::VectorXd ew = post.precision * wv;
    const double num = ew.dot(y - post.mu);
    const double den = wv.dot(ew);
    return beta * num - 0.5 * beta * beta * den;
}

ScoredSubset llr_max(const SubsetWeights& w, const PosteriorGaussian& post,
                     const Eigen::VectorXd& y) {
    check_subset(w, post, y, "llr_max");
    if (!w.any()) throw UndefinedMleError("llr_max: all-zero subset");

    const Eigen::VectorXd wv = w.as_vector();
    const Eigen::VectorXd ew = post.precision * wv;
    const double den = wv.dot(ew);
    if (den <= degeneracy_tolerance(post.precision))
        throw DegenerateError("llr_max: w'Ew at or below degeneracy tolerance");
    const double num = ew.dot(y - post.mu);

    ScoredSubset out;
    out.w = w;
    out.beta_star = num / den;
    out.llr = num * num / (2.0 * den);
    return out;
}

}  // namespace gpscan
