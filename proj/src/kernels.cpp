#include "gpssm/kernels.hpp"

#include <cmath>

namespace gpssm {

void KernelParams::validate() const {
    if (!std::isfinite(variance) || variance < 0.0)
        throw InvalidInputError("kernel variance must be finite and nonnegative");
    if (!std::isfinite(decay) || decay <= 0.0)
        throw InvalidInputError("kernel decay must be finite and positive");
}

double eval_sqdist(const KernelParams& kp, double sq_dist) {
    if (!std::isfinite(sq_dist) || sq_dist < 0.0)
        throw InvalidInputError("squared distance must be finite and nonnegative");
    return kp.variance * std::exp(-kp.decay * sq_dist);
}

double eval_sqexp(const KernelParams& kp, double u, double v) {
    if (!std::isfinite(u) || !std::isfinite(v))
        throw InvalidInputError("kernel input must be finite");
    const double d = u - v;
    return eval_sqdist(kp, d * d);
}

double eval_sqexp(const KernelParams& kp, const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
    if (!u.allFinite() || !v.allFinite())
        throw InvalidInputError("kernel input must be finite");
    return eval_sqdist(kp, (u - v).squaredNorm());
}

namespace {

template <typename Point>
GramMatrix gram_impl(const KernelParams& kp, const std::vector<Point>& points, double jitter) {
    kp.validate();
    if (points.empty()) throw InvalidInputError("gram: empty point set");
    if (jitter < 0.0) throw InvalidInputError("gram: negative jitter");
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    GramMatrix g;
    g.jitter = jitter;
    g.entries.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double v = eval_sqexp(kp, points[i], points[j]);
            g.entries(i, j) = v;
            g.entries(j, i) = v;
        }
        g.entries(i, i) += jitter;
    }
    return g;
}

}  // namespace

GramMatrix gram(const KernelParams& kp, const std::vector<double>& points, double jitter) {
    return gram_impl(kp, points, jitter);
}

GramMatrix gram(const KernelParams& kp, const std::vector<Eigen::Vector2d>& points, double jitter) {
    return gram_impl(kp, points, jitter);
}

GramMatrix gram(const KernelParams& kp, const std::vector<double>& points) {
    return gram_impl(kp, points, default_jitter(kp));
}

GramMatrix gram(const KernelParams& kp, const std::vector<Eigen::Vector2d>& points) {
    return gram_impl(kp, points, default_jitter(kp));
}

namespace {

// Plain Cholesky pass that records the smallest pivot encountered before
// failing; only run after Eigen's LLT has already reported a failure.
double smallest_pivot(const Eigen::MatrixXd& m) {
    const Eigen::Index n = m.rows();
    Eigen::MatrixXd a = m;
    double smallest = a(0, 0);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double pivot = a(k, k);
        if (pivot < smallest) smallest = pivot;
        if (pivot <= 0.0) return smallest;
        const double root = std::sqrt(pivot);
        for (Eigen::Index i = k + 1; i < n; ++i) {
            const double lik = a(i, k) / root;
            for (Eigen::Index j = k + 1; j <= i; ++j) a(i, j) -= lik * a(j, k) / root;
        }
    }
    return smallest;
}

}  // namespace

CholFactor::CholFactor(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw InvalidInputError("CholFactor: matrix must be square and nonempty");
    llt_.compute(m);
    if (llt_.info() != Eigen::Success)
        throw IllConditionedError("factorization failed: matrix not positive definite",
                                  smallest_pivot(m));
    log_det_ = 0.0;
    const auto& l = llt_.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0))
            throw IllConditionedError("factorization failed: nonpositive pivot", l(i, i));
        log_det_ += 2.0 * std::log(l(i, i));
    }
}

double CholFactor::inv_quad(const Eigen::VectorXd& r) const {
    const Eigen::VectorXd half = llt_.matrixL().solve(r);
    return half.squaredNorm();
}

Eigen::VectorXd CholFactor::scale(const Eigen::VectorXd& z) const {
    return llt_.matrixL() * z;
}

std::pair<Eigen::MatrixXd, double> chol_solve_logdet(const GramMatrix& g, const Eigen::MatrixXd& rhs) {
    CholFactor chol(g.entries);
    return {chol.solve(rhs), chol.log_det()};
}

double mvn_log_density_residual(const CholFactor& chol, const Eigen::VectorXd& residual) {
    static const double log_two_pi = std::log(2.0 * M_PI);
    const double k = static_cast<double>(residual.size());
    return -0.5 * (k * log_two_pi + chol.log_det() + chol.inv_quad(residual));
}

}  // namespace gpssm
