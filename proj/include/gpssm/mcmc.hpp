#ifndef GPSSM_MCMC_HPP
#define GPSSM_MCMC_HPP

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gpssm/kernels.hpp"
#include "gpssm/model.hpp"
#include "gpssm/rng.hpp"
#include "gpssm/types.hpp"

namespace gpssm {

struct LogNormalPrior {
    double location = 0.0;
    double scale = 1.0;
    double log_pdf(double v) const;
    double mean() const;
};

// Prior structure: bivariate Gaussian for each coefficient pair, standard
// Gaussian for the initial-layer mean, lognormal for every kernel parameter.
struct PriorSpec {
    Eigen::Vector2d obs_coef_mean = Eigen::Vector2d::Zero();
    Eigen::Vector2d evo_coef_mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d obs_coef_cov = Eigen::Matrix2d::Identity() * 1000.0;
    Eigen::Matrix2d evo_coef_cov = Eigen::Matrix2d::Identity() * 1000.0;

    LogNormalPrior obs_fn_var{0.0, 0.7};
    LogNormalPrior evo_fn_var{0.0, 0.7};
    LogNormalPrior obs_noise_var{3.0, 0.1};
    LogNormalPrior evo_noise_var{3.0, 0.1};
    LogNormalPrior init_var{3.0, 0.1};
    LogNormalPrior obs_fn_decay{0.0, 0.25};
    LogNormalPrior evo_fn_decay{0.0, 0.25};
    LogNormalPrior obs_noise_decay{0.0, 0.25};
    LogNormalPrior evo_noise_decay{0.0, 0.25};
    LogNormalPrior init_decay{0.0, 0.25};

    void validate() const;
};

// The ten kernel parameters, in sweep order.
enum class KernelParamId {
    obs_fn_var,
    evo_fn_var,
    obs_noise_var,
    evo_noise_var,
    init_var,
    obs_fn_decay,
    evo_fn_decay,
    obs_noise_decay,
    evo_noise_decay,
    init_decay,
};
inline constexpr int kNumKernelParams = 10;

const char* kernel_param_name(KernelParamId id);
double get_kernel_param(const ModelParams& p, KernelParamId id);
void set_kernel_param(ModelParams& p, KernelParamId id, double value);
const LogNormalPrior& prior_for(const PriorSpec& prior, KernelParamId id);

struct TmcmcConfig {
    double epsilon_scale = 0.5;     // scale of the half-Gaussian epsilon proposal
    double sign_probability = 0.5;  // probability of a +epsilon sign per coordinate
};

struct ChainConfig {
    long iterations = 1000;
    long burnin = 500;
    long thin = 1;
    TmcmcConfig tmcmc;
    double mh_step = 0.5;   // initial log-scale random-walk step
    bool adapt = true;      // Robbins-Monro step adaptation during burn-in only
    double jitter_rel = 1e-8;
    bool cache_check = false;  // recompute-and-compare caches every 1000 iterations

    void validate() const;
};

// The sampling problem: observations at the first n_monitored sites;
// further sites carry latent trajectories only (prediction targets and,
// implicitly, missing cells through the mask).
struct FitProblem {
    SiteSet sites;
    int n_monitored = 0;
    ObservationGrid y;
    int latent_tmax = 0;  // latent layers 0..latent_tmax, >= y's T

    void validate() const;
    static FitProblem plain(const ObservationGrid& y, const SiteSet& sites);
};

// Current chain position plus factorization caches. The caches are kept
// consistent with (params, latents) by every accepted move.
struct ChainState {
    ModelParams params;   // init_mean padded to all sites; augmented entries fixed at 0
    LatentField latents;  // all sites x (latent_tmax+1)

    std::optional<CholFactor> init_chol;
    std::optional<CholFactor> trans_chol;
    std::optional<CholFactor> obs_chol;
    double ld_init = 0.0;
    double ld_trans = 0.0;
    double ld_obs = 0.0;
    long iteration = 0;

    double log_joint() const { return ld_init + ld_trans + ld_obs; }
};

struct AcceptanceCounter {
    long proposals = 0;
    long accepts = 0;
    double rate() const { return proposals > 0 ? double(accepts) / double(proposals) : 0.0; }
};

struct AcceptanceStats {
    std::vector<AcceptanceCounter> latent_blocks;  // block per time layer
    std::array<AcceptanceCounter, kNumKernelParams> kernel{};
};

struct TraceSample {
    ModelParams params;
    Eigen::MatrixXd latents;
};

struct Trace {
    std::vector<TraceSample> samples;
    AcceptanceStats acceptance;

    std::uint64_t seed = 0;
    long iterations = 0;
    long burnin = 0;
    long thin = 1;
    SiteSet sites;
    int n_monitored = 0;
    int obs_tmax = 0;
    int latent_tmax = 0;
    std::vector<double> tmcmc_scales;       // final per-block scales
    std::vector<double> mh_steps;           // final per-parameter steps

    int size() const { return static_cast<int>(samples.size()); }
};

// ---- generic sampling primitives ------------------------------------

double accept_probability(double log_ratio);

// One additive-TMCMC move over the listed coordinates of x: a single
// half-Gaussian epsilon, independent +/- signs, symmetric proposal.
// log_target_value must hold log_target(x) on entry and holds the value
// at the returned position on exit.
bool additive_tmcmc_move(Eigen::VectorXd& x, const std::vector<int>& coords, double eps_scale,
                         double sign_prob,
                         const std::function<double(const Eigen::VectorXd&)>& log_target,
                         double& log_target_value, Rng& rng);

// One random-walk Metropolis move on log(value); log_density is the
// target density of the value on its original scale (Jacobian handled
// internally).
bool log_scale_rwm_move(double& value, double step,
                        const std::function<double(double)>& log_density, Rng& rng);

// ---- model moves -----------------------------------------------------

struct GaussianConditional {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Conditional of a coefficient vector with Gaussian prior entering a
// Gaussian likelihood linearly: data ~ N(design * coef, noise).
GaussianConditional linear_gaussian_conditional(const Eigen::VectorXd& prior_mean,
                                                const Eigen::MatrixXd& prior_cov,
                                                const Eigen::MatrixXd& design,
                                                const Eigen::VectorXd& data,
                                                const CholFactor& noise_chol);

// Exact Gaussian full conditional of the initial-layer mean (standard
// normal prior against the initial-layer likelihood).
GaussianConditional init_mean_conditional(const ChainState& state, const FitProblem& prob);

ChainState make_initial_state(const FitProblem& prob, const PriorSpec& prior,
                              const ChainConfig& cfg);

void gibbs_update_init_mean(ChainState& state, const FitProblem& prob, Rng& rng);
void gibbs_update_evo_coef(ChainState& state, const FitProblem& prob, const PriorSpec& prior,
                           Rng& rng);
void gibbs_update_obs_coef(ChainState& state, const FitProblem& prob, const PriorSpec& prior,
                           Rng& rng);

// Log-scale Metropolis update of one kernel parameter; returns accepted.
// A proposal that fails to factorize is rejected outright.
bool mh_update_kernel_param(ChainState& state, KernelParamId which, const PriorSpec& prior,
                            double step, const FitProblem& prob, const ChainConfig& cfg, Rng& rng);

// One sweep of per-time-layer additive TMCMC blocks (layer 0 included).
// scales holds one epsilon scale per layer; accepted flags are returned
// per block through the stats counter.
void tmcmc_block_update_latents(ChainState& state, const FitProblem& prob,
                                const std::vector<double>& scales, double sign_prob,
                                const ChainConfig& cfg, AcceptanceStats& stats, Rng& rng);

// Full posterior sampler. Sweep order per iteration: latent blocks
// (layer 0..T), evolution coefficients, observation coefficients,
// initial-layer mean, then the ten kernel parameters in declared order.
Trace run_chain(const FitProblem& prob, const PriorSpec& prior, const ChainConfig& cfg, Rng& rng);

// ---- diagnostics ------------------------------------------------------

struct ParamSummary {
    std::string name;
    double mean = 0.0;
    double median = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double psr = 1.0;       // split-chain potential scale reduction
    bool psr_defined = false;
};

struct DiagnosticsReport {
    double level = 0.95;
    std::vector<ParamSummary> params;
    std::vector<std::pair<std::string, double>> acceptance_rates;
};

// Parameter vector layout used by traces and diagnostics (coefficients,
// kernel parameters, then the monitored-site initial means).
std::vector<std::string> param_names(const Trace& trace);
Eigen::VectorXd param_vector(const ModelParams& p, int n_monitored);

DiagnosticsReport diagnostics(const std::vector<Trace>& traces, double level = 0.95);
inline DiagnosticsReport diagnostics(const Trace& trace, double level = 0.95) {
    return diagnostics(std::vector<Trace>{trace}, level);
}

}  // namespace gpssm

#endif
