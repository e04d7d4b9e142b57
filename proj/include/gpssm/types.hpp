#ifndef GPSSM_TYPES_HPP
#define GPSSM_TYPES_HPP

#include <Eigen/Dense>
#include <vector>

#include "gpssm/errors.hpp"
#include "gpssm/kernels.hpp"

namespace gpssm {

// Monitoring locations, in post-projection planar coordinates.
struct SiteSet {
    std::vector<Eigen::Vector2d> coords;

    int n() const { return static_cast<int>(coords.size()); }
    // duplicate sites are permitted but force reliance on jitter
    bool has_duplicates(double tol = 1e-12) const;
    void validate() const;
};

// Latent process values x(site i, time t), t = 0..T. Column t holds layer t.
struct LatentField {
    Eigen::MatrixXd values;  // n x (T+1)

    int n() const { return static_cast<int>(values.rows()); }
    int tmax() const { return static_cast<int>(values.cols()) - 1; }
    void validate() const;
};

// Observations y(site i, time t), t = 1..T. Column t-1 holds time t.
// Masked-out cells carry NaN and are never read by the densities.
struct ObservationGrid {
    Eigen::MatrixXd values;                              // n x T
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;  // true = observed

    int n() const { return static_cast<int>(values.rows()); }
    int tmax() const { return static_cast<int>(values.cols()); }
    int observed_count() const;
    void validate() const;

    static ObservationGrid fully_observed(const Eigen::MatrixXd& values);
};

// All model parameters.
//   observation equation: y = obs_intercept + obs_slope * x + f*(x) + obs noise
//   evolution equation:   x_t = evo_intercept + evo_slope * x_{t-1} + g*(x_{t-1}) + evo noise
// where f*, g* are the centered Gaussian processes with kernels obs_fn, evo_fn.
struct ModelParams {
    double obs_intercept = 0.0;  // beta_0f
    double obs_slope = 1.0;      // beta_1f
    double evo_intercept = 0.0;  // beta_0g
    double evo_slope = 1.0;      // beta_1g

    KernelParams obs_fn;     // kernel of the observation transformation GP (on latent values)
    KernelParams evo_fn;     // kernel of the evolution transformation GP (on latent values)
    KernelParams obs_noise;  // spatial kernel of the observation noise
    KernelParams evo_noise;  // spatial kernel of the evolution noise
    KernelParams init;       // spatial kernel of the initial latent layer

    Eigen::VectorXd init_mean;  // mean of the initial layer at the monitored sites

    void validate(int n_sites) const;
};

}  // namespace gpssm

#endif
