#ifndef GPSSM_KERNELS_HPP
#define GPSSM_KERNELS_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "gpssm/errors.hpp"

namespace gpssm {

// Squared exponential kernel c(u,v) = variance * exp(-decay * ||u-v||^2).
// variance may be zero (degenerate kernel, used by the linear-Gaussian
// special cases); decay must be strictly positive.
struct KernelParams {
    double variance = 1.0;
    double decay = 1.0;

    void validate() const;
};

// Relative jitter applied to Gram diagonals unless the caller overrides it.
inline double default_jitter(const KernelParams& kp) { return 1e-8 * kp.variance; }

// Kernel evaluation on a precomputed squared distance.
double eval_sqdist(const KernelParams& kp, double sq_dist);

// 1-D inputs (kernels acting on latent values).
double eval_sqexp(const KernelParams& kp, double u, double v);
// planar inputs (spatial kernels).
double eval_sqexp(const KernelParams& kp, const Eigen::Vector2d& u, const Eigen::Vector2d& v);

// Symmetric kernel matrix with jitter on the diagonal. Entries are computed
// once for i <= j and mirrored, so the matrix is symmetric bit-exactly.
struct GramMatrix {
    Eigen::MatrixXd entries;
    double jitter = 0.0;
};

GramMatrix gram(const KernelParams& kp, const std::vector<double>& points, double jitter);
GramMatrix gram(const KernelParams& kp, const std::vector<Eigen::Vector2d>& points, double jitter);
// jitter defaulted to default_jitter(kp)
GramMatrix gram(const KernelParams& kp, const std::vector<double>& points);
GramMatrix gram(const KernelParams& kp, const std::vector<Eigen::Vector2d>& points);

// Cholesky factorization of a symmetric positive definite matrix, kept
// around for repeated solves and log-determinants.
class CholFactor {
  public:
    // Throws IllConditionedError (carrying the smallest pivot) when the
    // matrix is not positive definite.
    explicit CholFactor(const Eigen::MatrixXd& m);

    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return llt_.solve(rhs); }
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
    Eigen::MatrixXd inverse() const {
        return llt_.solve(Eigen::MatrixXd::Identity(dim(), dim()));
    }
    double log_det() const { return log_det_; }
    Eigen::Index dim() const { return llt_.matrixL().rows(); }
    const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }
    // quadratic form r' M^{-1} r
    double inv_quad(const Eigen::VectorXd& r) const;
    // L z, for drawing correlated Gaussians
    Eigen::VectorXd scale(const Eigen::VectorXd& z) const;

  private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double log_det_ = 0.0;
};

// Solves G x = rhs and returns log|G| alongside.
std::pair<Eigen::MatrixXd, double> chol_solve_logdet(const GramMatrix& g, const Eigen::MatrixXd& rhs);

// log N(r + mean; mean, factorized cov) for a residual vector r
double mvn_log_density_residual(const CholFactor& chol, const Eigen::VectorXd& residual);

}  // namespace gpssm

#endif
