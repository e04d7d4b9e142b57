#include "gpssm/mcmc.hpp"

#include <cmath>
#include <numeric>

#include "gpssm/stats.hpp"

namespace gpssm {

double LogNormalPrior::log_pdf(double v) const {
    if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
    static const double log_two_pi = std::log(2.0 * M_PI);
    const double z = (std::log(v) - location) / scale;
    return -std::log(v) - std::log(scale) - 0.5 * log_two_pi - 0.5 * z * z;
}

double LogNormalPrior::mean() const { return std::exp(location + 0.5 * scale * scale); }

void PriorSpec::validate() const {
    for (const auto* ln : {&obs_fn_var, &evo_fn_var, &obs_noise_var, &evo_noise_var, &init_var,
                           &obs_fn_decay, &evo_fn_decay, &obs_noise_decay, &evo_noise_decay,
                           &init_decay})
        if (!(ln->scale > 0.0)) throw InvalidInputError("PriorSpec: lognormal scale must be positive");
    Eigen::LLT<Eigen::Matrix2d> a(obs_coef_cov), b(evo_coef_cov);
    if (a.info() != Eigen::Success || b.info() != Eigen::Success)
        throw InvalidInputError("PriorSpec: coefficient prior covariance not positive definite");
}

const char* kernel_param_name(KernelParamId id) {
    switch (id) {
        case KernelParamId::obs_fn_var: return "obs_fn_var";
        case KernelParamId::evo_fn_var: return "evo_fn_var";
        case KernelParamId::obs_noise_var: return "obs_noise_var";
        case KernelParamId::evo_noise_var: return "evo_noise_var";
        case KernelParamId::init_var: return "init_var";
        case KernelParamId::obs_fn_decay: return "obs_fn_decay";
        case KernelParamId::evo_fn_decay: return "evo_fn_decay";
        case KernelParamId::obs_noise_decay: return "obs_noise_decay";
        case KernelParamId::evo_noise_decay: return "evo_noise_decay";
        case KernelParamId::init_decay: return "init_decay";
    }
    throw InvalidInputError("unknown kernel parameter id");
}

double get_kernel_param(const ModelParams& p, KernelParamId id) {
    switch (id) {
        case KernelParamId::obs_fn_var: return p.obs_fn.variance;
        case KernelParamId::evo_fn_var: return p.evo_fn.variance;
        case KernelParamId::obs_noise_var: return p.obs_noise.variance;
        case KernelParamId::evo_noise_var: return p.evo_noise.variance;
        case KernelParamId::init_var: return p.init.variance;
        case KernelParamId::obs_fn_decay: return p.obs_fn.decay;
        case KernelParamId::evo_fn_decay: return p.evo_fn.decay;
        case KernelParamId::obs_noise_decay: return p.obs_noise.decay;
        case KernelParamId::evo_noise_decay: return p.evo_noise.decay;
        case KernelParamId::init_decay: return p.init.decay;
    }
    throw InvalidInputError("unknown kernel parameter id");
}

void set_kernel_param(ModelParams& p, KernelParamId id, double value) {
    switch (id) {
        case KernelParamId::obs_fn_var: p.obs_fn.variance = value; return;
        case KernelParamId::evo_fn_var: p.evo_fn.variance = value; return;
        case KernelParamId::obs_noise_var: p.obs_noise.variance = value; return;
        case KernelParamId::evo_noise_var: p.evo_noise.variance = value; return;
        case KernelParamId::init_var: p.init.variance = value; return;
        case KernelParamId::obs_fn_decay: p.obs_fn.decay = value; return;
        case KernelParamId::evo_fn_decay: p.evo_fn.decay = value; return;
        case KernelParamId::obs_noise_decay: p.obs_noise.decay = value; return;
        case KernelParamId::evo_noise_decay: p.evo_noise.decay = value; return;
        case KernelParamId::init_decay: p.init.decay = value; return;
    }
    throw InvalidInputError("unknown kernel parameter id");
}

const LogNormalPrior& prior_for(const PriorSpec& prior, KernelParamId id) {
    switch (id) {
        case KernelParamId::obs_fn_var: return prior.obs_fn_var;
        case KernelParamId::evo_fn_var: return prior.evo_fn_var;
        case KernelParamId::obs_noise_var: return prior.obs_noise_var;
        case KernelParamId::evo_noise_var: return prior.evo_noise_var;
        case KernelParamId::init_var: return prior.init_var;
        case KernelParamId::obs_fn_decay: return prior.obs_fn_decay;
        case KernelParamId::evo_fn_decay: return prior.evo_fn_decay;
        case KernelParamId::obs_noise_decay: return prior.obs_noise_decay;
        case KernelParamId::evo_noise_decay: return prior.evo_noise_decay;
        case KernelParamId::init_decay: return prior.init_decay;
    }
    throw InvalidInputError("unknown kernel parameter id");
}

void ChainConfig::validate() const {
    if (iterations < 0) throw ConfigError("ChainConfig: negative iteration count");
    if (burnin < 0 || (iterations > 0 && burnin >= iterations))
        throw ConfigError("ChainConfig: burn-in must be smaller than the iteration count");
    if (thin < 1) throw ConfigError("ChainConfig: thin must be >= 1");
    if (!(tmcmc.epsilon_scale > 0.0)) throw ConfigError("ChainConfig: epsilon scale must be positive");
    if (!(tmcmc.sign_probability > 0.0 && tmcmc.sign_probability < 1.0))
        throw ConfigError("ChainConfig: sign probability must lie in (0,1)");
    if (!(mh_step > 0.0)) throw ConfigError("ChainConfig: Metropolis step must be positive");
    if (!(jitter_rel >= 0.0)) throw ConfigError("ChainConfig: negative jitter");
}

void FitProblem::validate() const {
    sites.validate();
    y.validate();
    if (n_monitored < 1 || n_monitored > sites.n())
        throw InvalidInputError("FitProblem: monitored site count out of range");
    if (y.n() != n_monitored)
        throw InvalidInputError("FitProblem: observation rows must match monitored sites");
    if (latent_tmax < y.tmax())
        throw InvalidInputError("FitProblem: latent horizon shorter than observations");
    if (y.observed_count() == 0)
        throw DegenerateInputError("FitProblem: at least one observed cell required");
}

FitProblem FitProblem::plain(const ObservationGrid& y, const SiteSet& sites) {
    FitProblem p;
    p.sites = sites;
    p.n_monitored = sites.n();
    p.y = y;
    p.latent_tmax = y.tmax();
    p.validate();
    return p;
}

// ---- generic sampling primitives ------------------------------------

double accept_probability(double log_ratio) {
    return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

namespace {

bool decide(double log_ratio, Rng& rng) {
    if (log_ratio >= 0.0) return true;
    return std::log(rng.uniform()) < log_ratio;
}

}  // namespace

bool additive_tmcmc_move(Eigen::VectorXd& x, const std::vector<int>& coords, double eps_scale,
                         double sign_prob,
                         const std::function<double(const Eigen::VectorXd&)>& log_target,
                         double& log_target_value, Rng& rng) {
    const double eps = std::abs(rng.normal(0.0, eps_scale));
    Eigen::VectorXd proposal = x;
    for (int c : coords) proposal(c) += rng.sign(sign_prob) * eps;
    const double lt_new = log_target(proposal);
    if (decide(lt_new - log_target_value, rng)) {
        x = proposal;
        log_target_value = lt_new;
        return true;
    }
    return false;
}

bool log_scale_rwm_move(double& value, double step,
                        const std::function<double(double)>& log_density, Rng& rng) {
    const double proposal = std::exp(std::log(value) + step * rng.normal());
    // log-scale walk: Jacobian ratio proposal/value enters the log ratio
    const double log_ratio =
        log_density(proposal) - log_density(value) + std::log(proposal) - std::log(value);
    if (decide(log_ratio, rng)) {
        value = proposal;
        return true;
    }
    return false;
}

// ---- density bookkeeping ---------------------------------------------

namespace {

Eigen::VectorXd transition_residual(const LatentField& x, const ModelParams& p) {
    const int n = x.n();
    const int T = x.tmax();
    Eigen::VectorXd r(static_cast<Eigen::Index>(n) * T);
    for (int t = 1; t <= T; ++t)
        for (int i = 0; i < n; ++i)
            r(stack_index(n, i, t)) = x.values(i, t) - p.evo_intercept - p.evo_slope * x.values(i, t - 1);
    return r;
}

Eigen::VectorXd obs_residual(const ObservationGrid& y, const LatentField& x, const ModelParams& p,
                             const std::vector<std::pair<int, int>>& cells) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t a = 0; a < cells.size(); ++a) {
        const auto [i, t] = cells[a];
        r(static_cast<Eigen::Index>(a)) =
            y.values(i, t - 1) - p.obs_intercept - p.obs_slope * x.values(i, t);
    }
    return r;
}

struct InitPart {
    CholFactor chol;
    double ld;
};

InitPart init_part(const ModelParams& p, const LatentField& x, const SiteSet& s, double jitter_rel) {
    CholFactor chol(gram(p.init, s.coords, jitter_rel * p.init.variance).entries);
    const double ld = mvn_log_density_residual(chol, x.values.col(0) - p.init_mean);
    return {std::move(chol), ld};
}

struct TransPart {
    CholFactor chol;
    double ld;
};

TransPart trans_part(const ModelParams& p, const LatentField& x, const SiteSet& s, double jitter_rel) {
    CholFactor chol(transition_covariance(x, p, s, jitter_rel).entries);
    const double ld = mvn_log_density_residual(chol, transition_residual(x, p));
    return {std::move(chol), ld};
}

struct ObsPart {
    CholFactor chol;
    double ld;
};

ObsPart obs_part(const ModelParams& p, const LatentField& x, const SiteSet& s,
                 const ObservationGrid& y, const std::vector<std::pair<int, int>>& cells,
                 double jitter_rel) {
    CholFactor chol(observation_covariance_cells(x, p, s, cells, jitter_rel));
    const double ld = mvn_log_density_residual(chol, obs_residual(y, x, p, cells));
    return {std::move(chol), ld};
}

void refresh_all(ChainState& state, const FitProblem& prob,
                 const std::vector<std::pair<int, int>>& cells, double jitter_rel) {
    auto init = init_part(state.params, state.latents, prob.sites, jitter_rel);
    state.init_chol.emplace(std::move(init.chol));
    state.ld_init = init.ld;
    auto trans = trans_part(state.params, state.latents, prob.sites, jitter_rel);
    state.trans_chol.emplace(std::move(trans.chol));
    state.ld_trans = trans.ld;
    auto obs = obs_part(state.params, state.latents, prob.sites, prob.y, cells, jitter_rel);
    state.obs_chol.emplace(std::move(obs.chol));
    state.ld_obs = obs.ld;
}

}  // namespace

// ---- conditionals and moves -------------------------------------------

GaussianConditional linear_gaussian_conditional(const Eigen::VectorXd& prior_mean,
                                                const Eigen::MatrixXd& prior_cov,
                                                const Eigen::MatrixXd& design,
                                                const Eigen::VectorXd& data,
                                                const CholFactor& noise_chol) {
    const Eigen::MatrixXd prior_prec = prior_cov.llt().solve(
        Eigen::MatrixXd::Identity(prior_cov.rows(), prior_cov.cols()));
    const Eigen::MatrixXd wdesign = noise_chol.solve(design);
    const Eigen::MatrixXd prec = prior_prec + design.transpose() * wdesign;
    const Eigen::VectorXd lin = prior_prec * prior_mean + wdesign.transpose() * data;
    Eigen::LLT<Eigen::MatrixXd> prec_llt(prec);
    if (prec_llt.info() != Eigen::Success)
        throw IllConditionedError("singular conditional precision", 0.0);
    GaussianConditional out;
    out.cov = prec_llt.solve(Eigen::MatrixXd::Identity(prec.rows(), prec.cols()));
    out.mean = prec_llt.solve(lin);
    return out;
}

GaussianConditional init_mean_conditional(const ChainState& state, const FitProblem& prob) {
    const int nm = prob.n_monitored;
    const Eigen::MatrixXd prec_all =
        state.init_chol->inverse();
    const Eigen::MatrixXd prec =
        Eigen::MatrixXd::Identity(nm, nm) + prec_all.topLeftCorner(nm, nm);
    const Eigen::VectorXd lin = (prec_all * state.latents.values.col(0)).head(nm);
    Eigen::LLT<Eigen::MatrixXd> prec_llt(prec);
    if (prec_llt.info() != Eigen::Success)
        throw IllConditionedError("singular initial-mean conditional", 0.0);
    GaussianConditional out;
    out.cov = prec_llt.solve(Eigen::MatrixXd::Identity(nm, nm));
    out.mean = prec_llt.solve(lin);
    return out;
}

namespace {

Eigen::VectorXd draw_gaussian(const GaussianConditional& g, Rng& rng) {
    Eigen::LLT<Eigen::MatrixXd> llt(g.cov);
    if (llt.info() != Eigen::Success)
        throw IllConditionedError("conditional covariance not positive definite", 0.0);
    Eigen::VectorXd z(g.mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return g.mean + llt.matrixL() * z;
}

}  // namespace

void gibbs_update_init_mean(ChainState& state, const FitProblem& prob, Rng& rng) {
    const GaussianConditional cond = init_mean_conditional(state, prob);
    const Eigen::VectorXd draw = draw_gaussian(cond, rng);
    state.params.init_mean.head(prob.n_monitored) = draw;
    // initial-layer residual changed; covariance caches untouched
    state.ld_init = mvn_log_density_residual(*state.init_chol,
                                             state.latents.values.col(0) - state.params.init_mean);
}

void gibbs_update_evo_coef(ChainState& state, const FitProblem& prob, const PriorSpec& prior,
                           Rng& rng) {
    const int n = prob.sites.n();
    const int T = state.latents.tmax();
    const Eigen::Index m = static_cast<Eigen::Index>(n) * T;
    Eigen::MatrixXd design(m, 2);
    Eigen::VectorXd data(m);
    for (int t = 1; t <= T; ++t) {
        for (int i = 0; i < n; ++i) {
            const Eigen::Index k = stack_index(n, i, t);
            design(k, 0) = 1.0;
            design(k, 1) = state.latents.values(i, t - 1);
            data(k) = state.latents.values(i, t);
        }
    }
    const GaussianConditional cond = linear_gaussian_conditional(
        prior.evo_coef_mean, prior.evo_coef_cov, design, data, *state.trans_chol);
    const Eigen::VectorXd draw = draw_gaussian(cond, rng);
    state.params.evo_intercept = draw(0);
    state.params.evo_slope = draw(1);
    state.ld_trans = mvn_log_density_residual(*state.trans_chol,
                                              transition_residual(state.latents, state.params));
}

void gibbs_update_obs_coef(ChainState& state, const FitProblem& prob, const PriorSpec& prior,
                           Rng& rng) {
    const auto cells = observed_cells(prob.y);
    const Eigen::Index m = static_cast<Eigen::Index>(cells.size());
    Eigen::MatrixXd design(m, 2);
    Eigen::VectorXd data(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const auto [i, t] = cells[a];
        design(a, 0) = 1.0;
        design(a, 1) = state.latents.values(i, t);
        data(a) = prob.y.values(i, t - 1);
    }
    const GaussianConditional cond = linear_gaussian_conditional(
        prior.obs_coef_mean, prior.obs_coef_cov, design, data, *state.obs_chol);
    const Eigen::VectorXd draw = draw_gaussian(cond, rng);
    state.params.obs_intercept = draw(0);
    state.params.obs_slope = draw(1);
    state.ld_obs = mvn_log_density_residual(*state.obs_chol,
                                            obs_residual(prob.y, state.latents, state.params, cells));
}

bool mh_update_kernel_param(ChainState& state, KernelParamId which, const PriorSpec& prior,
                            double step, const FitProblem& prob, const ChainConfig& cfg, Rng& rng) {
    const double current = get_kernel_param(state.params, which);
    const double proposal = std::exp(std::log(current) + step * rng.normal());
    const LogNormalPrior& pr = prior_for(prior, which);

    ModelParams cand = state.params;
    set_kernel_param(cand, which, proposal);

    double log_ratio = pr.log_pdf(proposal) - pr.log_pdf(current) +
                       std::log(proposal) - std::log(current);

    const auto cells = observed_cells(prob.y);
    // draw the acceptance uniform before any rebuild so rejected
    // factorizations do not perturb the stream
    const double u = rng.uniform();
    try {
        switch (which) {
            case KernelParamId::obs_fn_var:
            case KernelParamId::obs_fn_decay:
            case KernelParamId::obs_noise_var:
            case KernelParamId::obs_noise_decay: {
                auto obs = obs_part(cand, state.latents, prob.sites, prob.y, cells, cfg.jitter_rel);
                log_ratio += obs.ld - state.ld_obs;
                if (!(std::log(u) < log_ratio)) return false;
                state.params = cand;
                state.obs_chol.emplace(std::move(obs.chol));
                state.ld_obs = obs.ld;
                return true;
            }
            case KernelParamId::evo_fn_var:
            case KernelParamId::evo_fn_decay:
            case KernelParamId::evo_noise_var:
            case KernelParamId::evo_noise_decay: {
                auto trans = trans_part(cand, state.latents, prob.sites, cfg.jitter_rel);
                log_ratio += trans.ld - state.ld_trans;
                if (!(std::log(u) < log_ratio)) return false;
                state.params = cand;
                state.trans_chol.emplace(std::move(trans.chol));
                state.ld_trans = trans.ld;
                return true;
            }
            case KernelParamId::init_var:
            case KernelParamId::init_decay: {
                auto init = init_part(cand, state.latents, prob.sites, cfg.jitter_rel);
                log_ratio += init.ld - state.ld_init;
                if (!(std::log(u) < log_ratio)) return false;
                state.params = cand;
                state.init_chol.emplace(std::move(init.chol));
                state.ld_init = init.ld;
                return true;
            }
        }
    } catch (const IllConditionedError&) {
        return false;  // non-PD proposal
    }
    return false;
}

void tmcmc_block_update_latents(ChainState& state, const FitProblem& prob,
                                const std::vector<double>& scales, double sign_prob,
                                const ChainConfig& cfg, AcceptanceStats& stats, Rng& rng) {
    const int n = prob.sites.n();
    const int T = state.latents.tmax();
    const auto cells = observed_cells(prob.y);

    // which layers touch the observation density
    std::vector<bool> layer_observed(static_cast<std::size_t>(T) + 1, false);
    for (const auto& [i, t] : cells) layer_observed[static_cast<std::size_t>(t)] = true;

    for (int t = 0; t <= T; ++t) {
        stats.latent_blocks[static_cast<std::size_t>(t)].proposals++;
        const double eps = std::abs(rng.normal(0.0, scales[static_cast<std::size_t>(t)]));
        Eigen::VectorXd shift(n);
        for (int i = 0; i < n; ++i) shift(i) = rng.sign(sign_prob) * eps;
        const double u = rng.uniform();

        LatentField proposal = state.latents;
        proposal.values.col(t) += shift;

        try {
            double log_ratio = 0.0;
            double new_ld_init = state.ld_init;
            std::optional<TransPart> trans;
            std::optional<ObsPart> obs;

            if (t == 0)
                new_ld_init = mvn_log_density_residual(*state.init_chol,
                                                       proposal.values.col(0) - state.params.init_mean);
            trans.emplace(trans_part(state.params, proposal, prob.sites, cfg.jitter_rel));
            log_ratio += (new_ld_init - state.ld_init) + (trans->ld - state.ld_trans);
            if (t >= 1 && layer_observed[static_cast<std::size_t>(t)]) {
                obs.emplace(obs_part(state.params, proposal, prob.sites, prob.y, cells, cfg.jitter_rel));
                log_ratio += obs->ld - state.ld_obs;
            }

            if (std::log(u) < log_ratio) {
                state.latents = std::move(proposal);
                state.ld_init = new_ld_init;
                state.trans_chol.emplace(std::move(trans->chol));
                state.ld_trans = trans->ld;
                if (obs) {
                    state.obs_chol.emplace(std::move(obs->chol));
                    state.ld_obs = obs->ld;
                }
                stats.latent_blocks[static_cast<std::size_t>(t)].accepts++;
            }
        } catch (const IllConditionedError&) {
            // proposal rejected
        }
    }
}

// ---- chain driver ------------------------------------------------------

ChainState make_initial_state(const FitProblem& prob, const PriorSpec& prior,
                              const ChainConfig& cfg) {
    prob.validate();
    prior.validate();
    const int n_all = prob.sites.n();
    const int T = prob.latent_tmax;

    ChainState state;
    state.params.obs_intercept = 0.0;
    state.params.obs_slope = 1.0;
    state.params.evo_intercept = 0.0;
    state.params.evo_slope = 1.0;
    state.params.obs_fn = {std::exp(prior.obs_fn_var.location), std::exp(prior.obs_fn_decay.location)};
    state.params.evo_fn = {std::exp(prior.evo_fn_var.location), std::exp(prior.evo_fn_decay.location)};
    state.params.obs_noise = {std::exp(prior.obs_noise_var.location),
                              std::exp(prior.obs_noise_decay.location)};
    state.params.evo_noise = {std::exp(prior.evo_noise_var.location),
                              std::exp(prior.evo_noise_decay.location)};
    state.params.init = {std::exp(prior.init_var.location), std::exp(prior.init_decay.location)};
    state.params.init_mean = Eigen::VectorXd::Zero(n_all);

    // start the latent field at the observations where available,
    // carrying values forward through gaps
    state.latents.values.setZero(n_all, T + 1);
    for (int t = 1; t <= prob.y.tmax(); ++t) {
        double layer_sum = 0.0;
        int layer_count = 0;
        for (int i = 0; i < prob.n_monitored; ++i) {
            if (prob.y.mask(i, t - 1)) {
                state.latents.values(i, t) = prob.y.values(i, t - 1);
                layer_sum += prob.y.values(i, t - 1);
                ++layer_count;
            } else {
                state.latents.values(i, t) = state.latents.values(i, t - 1);
            }
        }
        const double layer_mean = layer_count > 0 ? layer_sum / layer_count : 0.0;
        for (int i = prob.n_monitored; i < n_all; ++i) state.latents.values(i, t) = layer_mean;
    }
    state.latents.values.col(0) = state.latents.values.col(1);
    for (int t = prob.y.tmax() + 1; t <= T; ++t)
        state.latents.values.col(t) = state.latents.values.col(prob.y.tmax());

    refresh_all(state, prob, observed_cells(prob.y), cfg.jitter_rel);
    return state;
}

namespace {

void check_cache_coherence(const ChainState& state, const FitProblem& prob,
                           const std::vector<std::pair<int, int>>& cells, double jitter_rel) {
    const auto close = [](const CholFactor& a, const CholFactor& b) {
        const Eigen::MatrixXd la = a.llt().matrixLLT();
        const Eigen::MatrixXd lb = b.llt().matrixLLT();
        const double scale = std::max(1.0, lb.cwiseAbs().maxCoeff());
        return (la - lb).cwiseAbs().maxCoeff() <= 1e-10 * scale;
    };
    auto init = init_part(state.params, state.latents, prob.sites, jitter_rel);
    auto trans = trans_part(state.params, state.latents, prob.sites, jitter_rel);
    auto obs = obs_part(state.params, state.latents, prob.sites, prob.y, cells, jitter_rel);
    if (!close(init.chol, *state.init_chol) || !close(trans.chol, *state.trans_chol) ||
        !close(obs.chol, *state.obs_chol) || std::abs(init.ld - state.ld_init) > 1e-8 ||
        std::abs(trans.ld - state.ld_trans) > 1e-8 || std::abs(obs.ld - state.ld_obs) > 1e-8)
        throw Error("cache coherence violated at iteration " + std::to_string(state.iteration));
}

constexpr double kBlockTargetRate = 0.23;
constexpr double kScalarTargetRate = 0.44;

void adapt_log_scale(double& scale, double accepted, double target, long k) {
    scale = std::exp(std::log(scale) + (accepted - target) / std::pow(double(k), 0.6));
}

}  // namespace

Trace run_chain(const FitProblem& prob, const PriorSpec& prior, const ChainConfig& cfg, Rng& rng) {
    cfg.validate();
    prob.validate();
    prior.validate();

    Trace trace;
    trace.seed = rng.seed();
    trace.iterations = cfg.iterations;
    trace.burnin = cfg.burnin;
    trace.thin = cfg.thin;
    trace.sites = prob.sites;
    trace.n_monitored = prob.n_monitored;
    trace.obs_tmax = prob.y.tmax();
    trace.latent_tmax = prob.latent_tmax;

    const int T = prob.latent_tmax;
    trace.acceptance.latent_blocks.assign(static_cast<std::size_t>(T) + 1, AcceptanceCounter{});
    std::vector<double> scales(static_cast<std::size_t>(T) + 1, cfg.tmcmc.epsilon_scale);
    std::vector<double> steps(kNumKernelParams, cfg.mh_step);
    trace.tmcmc_scales = scales;
    trace.mh_steps = steps;
    if (cfg.iterations == 0) return trace;

    ChainState state = make_initial_state(prob, prior, cfg);
    const auto cells = observed_cells(prob.y);

    std::vector<long> block_accepts_before(scales.size(), 0);
    for (long iter = 1; iter <= cfg.iterations; ++iter) {
        state.iteration = iter;

        for (std::size_t b = 0; b < scales.size(); ++b)
            block_accepts_before[b] = trace.acceptance.latent_blocks[b].accepts;
        tmcmc_block_update_latents(state, prob, scales, cfg.tmcmc.sign_probability, cfg,
                                   trace.acceptance, rng);
        gibbs_update_evo_coef(state, prob, prior, rng);
        gibbs_update_obs_coef(state, prob, prior, rng);
        gibbs_update_init_mean(state, prob, rng);
        for (int k = 0; k < kNumKernelParams; ++k) {
            const auto id = static_cast<KernelParamId>(k);
            trace.acceptance.kernel[static_cast<std::size_t>(k)].proposals++;
            const bool acc = mh_update_kernel_param(state, id, prior,
                                                    steps[static_cast<std::size_t>(k)], prob, cfg, rng);
            if (acc) trace.acceptance.kernel[static_cast<std::size_t>(k)].accepts++;
            if (cfg.adapt && iter <= cfg.burnin)
                adapt_log_scale(steps[static_cast<std::size_t>(k)], acc ? 1.0 : 0.0,
                                kScalarTargetRate, iter);
        }
        if (cfg.adapt && iter <= cfg.burnin) {
            for (std::size_t b = 0; b < scales.size(); ++b) {
                const double acc =
                    trace.acceptance.latent_blocks[b].accepts > block_accepts_before[b] ? 1.0 : 0.0;
                adapt_log_scale(scales[b], acc, kBlockTargetRate, iter);
            }
        }

        if (cfg.cache_check && iter % 1000 == 0)
            check_cache_coherence(state, prob, cells, cfg.jitter_rel);

        if (iter > cfg.burnin && (iter - cfg.burnin) % cfg.thin == 0)
            trace.samples.push_back({state.params, state.latents.values});
    }
    trace.tmcmc_scales = scales;
    trace.mh_steps = steps;
    return trace;
}

// ---- diagnostics --------------------------------------------------------

std::vector<std::string> param_names(const Trace& trace) {
    std::vector<std::string> names = {"obs_intercept", "obs_slope", "evo_intercept", "evo_slope"};
    for (int k = 0; k < kNumKernelParams; ++k)
        names.push_back(kernel_param_name(static_cast<KernelParamId>(k)));
    for (int i = 0; i < trace.n_monitored; ++i) names.push_back("init_mean_" + std::to_string(i));
    return names;
}

Eigen::VectorXd param_vector(const ModelParams& p, int n_monitored) {
    Eigen::VectorXd v(4 + kNumKernelParams + n_monitored);
    v(0) = p.obs_intercept;
    v(1) = p.obs_slope;
    v(2) = p.evo_intercept;
    v(3) = p.evo_slope;
    for (int k = 0; k < kNumKernelParams; ++k)
        v(4 + k) = get_kernel_param(p, static_cast<KernelParamId>(k));
    v.tail(n_monitored) = p.init_mean.head(n_monitored);
    return v;
}

DiagnosticsReport diagnostics(const std::vector<Trace>& traces, double level) {
    if (traces.empty()) throw DegenerateInputError("diagnostics: no traces");
    for (const auto& t : traces) {
        if (t.samples.empty()) throw DegenerateInputError("diagnostics: empty trace");
        if (t.samples.size() < 2)
            throw DegenerateInputError("diagnostics: single-sample trace");
    }

    DiagnosticsReport report;
    report.level = level;
    const auto names = param_names(traces.front());
    const int n_params = static_cast<int>(names.size());
    const double lo_p = (1.0 - level) / 2.0;

    for (int k = 0; k < n_params; ++k) {
        std::vector<double> pooled;
        // groups for the scale-reduction statistic: the chains themselves
        // when several seeds are given, the chain halves otherwise
        std::vector<std::vector<double>> groups;
        for (const auto& t : traces) {
            std::vector<double> series;
            series.reserve(t.samples.size());
            for (const auto& s : t.samples)
                series.push_back(param_vector(s.params, t.n_monitored)(k));
            pooled.insert(pooled.end(), series.begin(), series.end());
            if (traces.size() >= 2) {
                groups.push_back(std::move(series));
            } else {
                const std::size_t half = series.size() / 2;
                groups.emplace_back(series.begin(), series.begin() + half);
                groups.emplace_back(series.begin() + half, series.end());
            }
        }

        ParamSummary ps;
        ps.name = names[static_cast<std::size_t>(k)];
        std::sort(pooled.begin(), pooled.end());
        ps.mean = mean_of(pooled);
        ps.median = quantile_sorted(pooled, 0.5);
        ps.lower = quantile_sorted(pooled, lo_p);
        ps.upper = quantile_sorted(pooled, 1.0 - lo_p);

        // psr = sqrt(1 + var(group means) / mean(within-group variance));
        // identical groups give exactly 1, constant traces leave it undefined
        bool ok = true;
        for (const auto& g : groups) ok = ok && g.size() >= 2;
        double w = 0.0;
        std::vector<double> means;
        if (ok) {
            for (const auto& g : groups) {
                means.push_back(mean_of(g));
                w += variance_of(g);
            }
            w /= static_cast<double>(groups.size());
        }
        if (ok && w > 0.0) {
            double b = 0.0;
            const double grand = mean_of(means);
            for (double mu : means) b += (mu - grand) * (mu - grand);
            b /= static_cast<double>(means.size() - 1);
            ps.psr = std::sqrt(1.0 + b / w);
            ps.psr_defined = true;
        } else {
            ps.psr = std::numeric_limits<double>::quiet_NaN();
            ps.psr_defined = false;
        }
        report.params.push_back(std::move(ps));
    }

    // acceptance rates aggregated over chains
    double lat_prop = 0.0, lat_acc = 0.0;
    for (const auto& t : traces)
        for (const auto& c : t.acceptance.latent_blocks) {
            lat_prop += static_cast<double>(c.proposals);
            lat_acc += static_cast<double>(c.accepts);
        }
    report.acceptance_rates.emplace_back("latent_blocks", lat_prop > 0 ? lat_acc / lat_prop : 0.0);
    for (int k = 0; k < kNumKernelParams; ++k) {
        double prop = 0.0, acc = 0.0;
        for (const auto& t : traces) {
            prop += static_cast<double>(t.acceptance.kernel[static_cast<std::size_t>(k)].proposals);
            acc += static_cast<double>(t.acceptance.kernel[static_cast<std::size_t>(k)].accepts);
        }
        report.acceptance_rates.emplace_back(kernel_param_name(static_cast<KernelParamId>(k)),
                                             prop > 0 ? acc / prop : 0.0);
    }
    return report;
}

}  // namespace gpssm
