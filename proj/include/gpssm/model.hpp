#ifndef GPSSM_MODEL_HPP
#define GPSSM_MODEL_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "gpssm/kernels.hpp"
#include "gpssm/types.hpp"

namespace gpssm {

// Stacking convention for time layers t = 1..T over n sites:
// coordinate (site i, time t) lives at flat index (t-1)*n + i.
inline Eigen::Index stack_index(int n, int i, int t) {
    return static_cast<Eigen::Index>(t - 1) * n + i;
}

// Covariance of the stacked latent layers 1..T given the lagged latent
// values: I_T (x) Sigma_evo_noise + Gram of evo_fn at the lagged values.
// T is taken from the latent field.
GramMatrix transition_covariance(const LatentField& x, const ModelParams& p, const SiteSet& s,
                                 double jitter_rel = 1e-8);

// Covariance of the stacked observations given the latent field:
// obs_fn at contemporaneous latent values plus the spatial observation
// noise kernel at equal times.
GramMatrix observation_covariance(const LatentField& x, const ModelParams& p, const SiteSet& s,
                                  double jitter_rel = 1e-8);

// (site, time) list of the observed cells, in stacking order.
std::vector<std::pair<int, int>> observed_cells(const ObservationGrid& y);

// Observation covariance restricted to an explicit cell list.
Eigen::MatrixXd observation_covariance_cells(const LatentField& x, const ModelParams& p,
                                             const SiteSet& s,
                                             const std::vector<std::pair<int, int>>& cells,
                                             double jitter_rel = 1e-8);

// Observation mean at an explicit cell list.
Eigen::VectorXd observation_mean_cells(const LatentField& x, const ModelParams& p,
                                       const std::vector<std::pair<int, int>>& cells);

// Log joint density of the latent field (initial layer + stacked
// transition layers with state-dependent covariance).
double state_log_density(const LatentField& x, const ModelParams& p, const SiteSet& s,
                         double jitter_rel = 1e-8);

// Log density of the observed cells given the latent field. The mask
// restricts the Gaussian form to observed coordinates.
double obs_log_density_given_state(const ObservationGrid& y, const LatentField& x,
                                   const ModelParams& p, const SiteSet& s,
                                   double jitter_rel = 1e-8);

// Exact Gaussian moments of the stacked observations in the linear
// special case (obs_fn and evo_fn variances both zero).
struct LinearGaussianMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};
LinearGaussianMoments linear_obs_moments(const ModelParams& p, const SiteSet& s, int T);

// Exact Gaussian log density of a fully observed grid in the linear
// special case. Requires obs_fn.variance == 0 and evo_fn.variance == 0.
double closed_form_obs_log_density_linear(const ObservationGrid& y, const ModelParams& p,
                                          const SiteSet& s);

// Approximate covariance of y(a,t) and y(b,tstar) when both process
// variances are small and |evo_slope| < 1: a geometric function of the
// time lag, plus the observation-noise term at equal times.
double approx_covariance_geometric(const ModelParams& p, const Eigen::Vector2d& a,
                                   const Eigen::Vector2d& b, int t, int tstar);

}  // namespace gpssm

#endif
