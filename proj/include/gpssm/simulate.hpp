#ifndef GPSSM_SIMULATE_HPP
#define GPSSM_SIMULATE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gpssm/rng.hpp"
#include "gpssm/types.hpp"

namespace gpssm {

// Progressive revelation of a random function: the inputs where it has
// been evaluated so far and the revealed values. One coherent sample
// path is maintained by conditioning every new draw on this record.
struct GpHistory {
    std::vector<double> inputs;
    std::vector<double> outputs;
};

// Linear mean of the transformation GPs.
struct GpMean {
    double intercept = 0.0;
    double slope = 1.0;
    double operator()(double x) const { return intercept + slope * x; }
};

// Inputs closer than this to an already revealed input are merged to the
// stored value instead of conditioned on.
inline constexpr double kGpMergeTol = 1e-8;

// Joint draw of the GP at new_inputs conditional on the history; the
// drawn values are appended to the history. Zero kernel variance makes
// the function its mean, deterministically. Draws are taken one input
// at a time (chained scalar conditionals), which is distributionally
// identical to a joint draw.
Eigen::VectorXd conditional_gp_draw(GpHistory& history, const GpMean& mean,
                                    const KernelParams& kernel,
                                    const std::vector<double>& new_inputs, Rng& rng,
                                    double jitter_rel = 1e-8);

// One draw of the initial latent layer at the monitored sites.
Eigen::VectorXd draw_initial_layer(const ModelParams& p, const SiteSet& s, Rng& rng,
                                   double jitter_rel = 1e-8);

struct SimulationOutput {
    LatentField latent;
    ObservationGrid observed;
    std::uint64_t seed = 0;
    // revealed sample paths of the evolution and observation GPs
    GpHistory evo_history;
    GpHistory obs_history;
};

// Forward simulation of the model.
// RNG stream order: initial layer, then per time step the evolution GP
// draw followed by the evolution noise, then one joint observation GP
// pass over all latent values, then per time step the observation noise.
SimulationOutput simulate_dataset(const ModelParams& p, const SiteSet& s, int T, Rng& rng,
                                  double jitter_rel = 1e-8);

// Evolution map of the fixed nonlinear benchmark.
double nonlinear_evolution_truth(double x);

// Kernels of the nonlinear benchmark generator; defaults are the fixed
// benchmark constants.
struct NonlinearBenchmarkKernels {
    KernelParams obs_noise{9.0, 6.25};     // sd 3.0
    KernelParams evo_noise{15.21, 6.25};   // sd 3.9
    KernelParams init{14.44, 4.0};         // sd 3.8
};

// Data from the fixed nonlinear non-Gaussian benchmark:
//   y = -4.1 + 0.7 x + obs noise
//   x evolves through nonlinear_evolution_truth plus evo noise,
//   initial layer centered Gaussian with the benchmark kernel.
SimulationOutput simulate_nonlinear_benchmark(const SiteSet& s, int T, Rng& rng,
                                              const NonlinearBenchmarkKernels& k = {},
                                              double jitter_rel = 1e-8);

}  // namespace gpssm

#endif
