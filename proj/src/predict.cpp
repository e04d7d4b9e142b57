#include "gpssm/predict.hpp"

#include <algorithm>
#include <cmath>

#include "gpssm/simulate.hpp"
#include "gpssm/stats.hpp"

namespace gpssm {

PredictionTarget PredictionTarget::at_new_site(const Eigen::Vector2d& site, int time) {
    PredictionTarget t;
    t.kind = Kind::new_site;
    t.site = site;
    t.time = time;
    return t;
}

PredictionTarget PredictionTarget::loo_cell(int site_index, int time) {
    PredictionTarget t;
    t.kind = Kind::leave_one_out;
    t.site_index = site_index;
    t.time = time;
    return t;
}

PredictionTarget PredictionTarget::missing_cell(int site_index, int time) {
    PredictionTarget t;
    t.kind = Kind::missing_cell;
    t.site_index = site_index;
    t.time = time;
    return t;
}

AugmentedLayout augment_target_latents(const std::vector<PredictionTarget>& targets,
                                       const SiteSet& monitored, int obs_tmax) {
    monitored.validate();
    AugmentedLayout layout;
    layout.all_sites = monitored;
    layout.n_monitored = monitored.n();
    layout.latent_tmax = obs_tmax;
    layout.target_rows.resize(targets.size(), -1);
    layout.collapsed.resize(targets.size(), false);

    constexpr double tol2 = 1e-12 * 1e-12;
    for (std::size_t q = 0; q < targets.size(); ++q) {
        const auto& tgt = targets[q];
        if (tgt.time < 1)
            throw InvalidInputError("augment_target_latents: target time must be >= 1");
        if (tgt.time > obs_tmax + 1)
            throw InvalidInputError(
                "augment_target_latents: prediction beyond one step past the data");
        layout.latent_tmax = std::max(layout.latent_tmax, tgt.time);

        if (tgt.kind != PredictionTarget::Kind::new_site) {
            if (tgt.site_index < 0 || tgt.site_index >= monitored.n())
                throw InvalidInputError("augment_target_latents: cell target outside the grid");
            layout.target_rows[q] = tgt.site_index;
            continue;
        }
        // collapse onto a monitored site when the coordinates coincide
        int row = -1;
        for (int i = 0; i < monitored.n(); ++i)
            if ((monitored.coords[i] - tgt.site).squaredNorm() <= tol2) {
                row = i;
                layout.collapsed[q] = true;
                break;
            }
        if (row < 0) {
            for (int i = layout.n_monitored; i < layout.all_sites.n(); ++i)
                if ((layout.all_sites.coords[i] - tgt.site).squaredNorm() <= tol2) row = i;
        }
        if (row < 0) {
            layout.all_sites.coords.push_back(tgt.site);
            row = layout.all_sites.n() - 1;
        }
        layout.target_rows[q] = row;
    }
    return layout;
}

FitProblem make_augmented_problem(const ObservationGrid& y, const AugmentedLayout& layout) {
    FitProblem prob;
    prob.sites = layout.all_sites;
    prob.n_monitored = layout.n_monitored;
    prob.y = y;
    prob.latent_tmax = std::max(layout.latent_tmax, y.tmax());
    prob.validate();
    return prob;
}

Interval interval(const PredictiveDraws& draws, double level) {
    if (!(level > 0.0 && level < 1.0))
        throw InvalidInputError("interval: level must lie in (0,1)");
    if (draws.samples.size() < 20)
        throw DegenerateInputError("interval: need at least 20 draws");
    std::vector<double> sorted = draws.samples;
    std::sort(sorted.begin(), sorted.end());
    const double tail = (1.0 - level) / 2.0;
    Interval out;
    out.lower = quantile_sorted(sorted, tail);
    out.median = quantile_sorted(sorted, 0.5);
    out.upper = quantile_sorted(sorted, 1.0 - tail);
    return out;
}

PredictiveEngine::PredictiveEngine(const ModelParams& params, const Eigen::MatrixXd& latents,
                                   const SiteSet& all_sites, int n_monitored,
                                   const ObservationGrid& y, double jitter_rel)
    : params_(params),
      latents_(latents),
      sites_(all_sites),
      n_monitored_(n_monitored),
      jitter_(jitter_rel * (params.obs_fn.variance + params.obs_noise.variance)),
      cells_(observed_cells(y)),
      chol_([&] {
          if (cells_.empty())
              throw DegenerateInputError("PredictiveEngine: no observed cells to condition on");
          LatentField x;
          x.values = latents;
          return CholFactor(
              observation_covariance_cells(x, params, all_sites, cells_, jitter_rel));
      }()) {
    residual_.resize(static_cast<Eigen::Index>(cells_.size()));
    for (std::size_t a = 0; a < cells_.size(); ++a) {
        const auto [i, t] = cells_[a];
        residual_(static_cast<Eigen::Index>(a)) =
            y.values(i, t - 1) - params_.obs_intercept - params_.obs_slope * latents_(i, t);
    }
    weights_ = chol_.solve(residual_);
}

PredictiveEngine::Moments PredictiveEngine::at(int latent_row, int time,
                                               const Eigen::Vector2d& site) const {
    const double x_star = latents_(latent_row, time);
    const Eigen::Index m = static_cast<Eigen::Index>(cells_.size());
    Eigen::VectorXd cross(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const auto [i, t] = cells_[a];
        double v = eval_sqexp(params_.obs_fn, x_star, latents_(i, t));
        if (t == time) v += eval_sqexp(params_.obs_noise, site, sites_.coords[i]);
        cross(a) = v;
    }
    const Eigen::VectorXd w = chol_.solve(cross);
    Moments mo;
    mo.mean = params_.obs_intercept + params_.obs_slope * x_star + cross.dot(weights_);
    mo.var = params_.obs_fn.variance + params_.obs_noise.variance + jitter_ - cross.dot(w);
    if (mo.var < 0.0) {
        mo.var = 0.0;
        mo.clamped = true;
    }
    return mo;
}

void PredictiveEngine::ensure_precision() const {
    if (precision_ready_) return;
    precision_ = chol_.inverse();
    precision_resid_ = precision_ * residual_;
    precision_ready_ = true;
}

PredictiveEngine::Moments PredictiveEngine::leave_one_out(int site_index, int time) const {
    ensure_precision();
    Eigen::Index k = -1;
    for (std::size_t a = 0; a < cells_.size(); ++a)
        if (cells_[a].first == site_index && cells_[a].second == time)
            k = static_cast<Eigen::Index>(a);
    if (k < 0) throw InvalidInputError("leave_one_out: target cell is not observed");

    // Gaussian conditional of one coordinate given the rest, read off the
    // precision matrix of the jointly factorized cells
    const double pkk = precision_(k, k);
    Moments mo;
    mo.var = 1.0 / pkk;
    const double mean_k = params_.obs_intercept + params_.obs_slope * latents_(site_index, time);
    mo.mean = mean_k + residual_(k) - precision_resid_(k) / pkk;
    if (mo.var < 0.0) {
        mo.var = 0.0;
        mo.clamped = true;
    }
    return mo;
}

namespace {

int find_target_row(const PredictionTarget& tgt, const Trace& trace) {
    if (tgt.kind != PredictionTarget::Kind::new_site) {
        if (tgt.site_index < 0 || tgt.site_index >= trace.n_monitored)
            throw ConfigError("prediction target indexes a site outside the monitored set");
        return tgt.site_index;
    }
    constexpr double tol2 = 1e-10 * 1e-10;
    for (int i = 0; i < trace.sites.n(); ++i)
        if ((trace.sites.coords[i] - tgt.site).squaredNorm() <= tol2) return i;
    throw ConfigError("prediction target site is not part of the trace's latent layout");
}

}  // namespace

PredictionResult posterior_predictive(const std::vector<PredictionTarget>& targets,
                                      const Trace& trace, const ObservationGrid& y, Rng& rng,
                                      double jitter_rel) {
    if (trace.samples.empty()) throw DegenerateInputError("posterior_predictive: empty trace");

    PredictionResult result;
    result.draws.resize(targets.size());
    std::vector<int> rows(targets.size());
    for (std::size_t q = 0; q < targets.size(); ++q) {
        rows[q] = find_target_row(targets[q], trace);
        if (targets[q].time < 1 || targets[q].time > trace.latent_tmax)
            throw ConfigError("prediction target time outside the trace's latent horizon");
        result.draws[q].target = targets[q];
        result.draws[q].samples.reserve(trace.samples.size());
    }

    for (const auto& sample : trace.samples) {
        PredictiveEngine engine(sample.params, sample.latents, trace.sites, trace.n_monitored, y,
                                jitter_rel);
        for (std::size_t q = 0; q < targets.size(); ++q) {
            const auto& tgt = targets[q];
            PredictiveEngine::Moments mo;
            if (tgt.kind == PredictionTarget::Kind::leave_one_out)
                mo = engine.leave_one_out(tgt.site_index, tgt.time);
            else
                mo = engine.at(rows[q], tgt.time,
                               tgt.kind == PredictionTarget::Kind::new_site
                                   ? tgt.site
                                   : trace.sites.coords[static_cast<std::size_t>(rows[q])]);
            if (mo.clamped) result.clamp_count++;
            result.draws[q].samples.push_back(mo.mean + std::sqrt(mo.var) * rng.normal());
        }
    }
    return result;
}

double predictive_draw(const LatentField& x_aug, const ModelParams& p, const SiteSet& all_sites,
                       int n_monitored, const ObservationGrid& y, const PredictionTarget& target,
                       Rng& rng, double jitter_rel, long* clamp_counter) {
    PredictiveEngine engine(p, x_aug.values, all_sites, n_monitored, y, jitter_rel);
    PredictiveEngine::Moments mo;
    if (target.kind == PredictionTarget::Kind::leave_one_out) {
        mo = engine.leave_one_out(target.site_index, target.time);
    } else if (target.kind == PredictionTarget::Kind::new_site) {
        int row = -1;
        constexpr double tol2 = 1e-10 * 1e-10;
        for (int i = 0; i < all_sites.n(); ++i)
            if ((all_sites.coords[i] - target.site).squaredNorm() <= tol2) row = i;
        if (row < 0) throw ConfigError("predictive_draw: target site missing from the latent layout");
        mo = engine.at(row, target.time, target.site);
    } else {
        mo = engine.at(target.site_index, target.time,
                       all_sites.coords[static_cast<std::size_t>(target.site_index)]);
    }
    if (mo.clamped && clamp_counter) ++*clamp_counter;
    return mo.mean + std::sqrt(mo.var) * rng.normal();
}

LooReport loo_coverage_report(const ObservationGrid& y, const Trace& trace, double level, Rng& rng,
                              double jitter_rel) {
    if (trace.samples.empty()) throw DegenerateInputError("loo_coverage_report: empty trace");
    const auto cells = observed_cells(y);

    LooReport report;
    report.total = static_cast<long>(cells.size());
    std::vector<PredictiveDraws> draws(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        draws[c].target = PredictionTarget::loo_cell(cells[c].first, cells[c].second);
        draws[c].samples.reserve(trace.samples.size());
    }

    for (const auto& sample : trace.samples) {
        PredictiveEngine engine(sample.params, sample.latents, trace.sites, trace.n_monitored, y,
                                jitter_rel);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto mo = engine.leave_one_out(cells[c].first, cells[c].second);
            if (mo.clamped) report.clamp_count++;
            draws[c].samples.push_back(mo.mean + std::sqrt(mo.var) * rng.normal());
        }
    }

    double total_length = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        LooRow row;
        row.site_index = cells[c].first;
        row.time = cells[c].second;
        row.interval = interval(draws[c], level);
        row.observed = y.values(row.site_index, row.time - 1);
        row.hit = row.observed >= row.interval.lower && row.observed <= row.interval.upper;
        if (row.hit) report.hits++;
        total_length += row.interval.length();
        report.rows.push_back(row);
    }
    report.mean_interval_length = report.total > 0 ? total_length / report.total : 0.0;
    return report;
}

LooReport loo_coverage_report_refit(const ObservationGrid& y, const SiteSet& monitored,
                                    const PriorSpec& prior, const ChainConfig& cfg, double level,
                                    Rng& rng) {
    const auto cells = observed_cells(y);
    LooReport report;
    report.total = static_cast<long>(cells.size());
    double total_length = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto [i, t] = cells[c];
        ObservationGrid held_out = y;
        held_out.mask(i, t - 1) = false;
        held_out.values(i, t - 1) = std::numeric_limits<double>::quiet_NaN();

        Rng chain_rng = rng.split(static_cast<std::uint64_t>(c));
        Trace trace = run_chain(FitProblem::plain(held_out, monitored), prior, cfg, chain_rng);
        Rng draw_rng = rng.split(1000003 + static_cast<std::uint64_t>(c));
        PredictionResult pred = impute_missing(held_out, trace, draw_rng);

        // locate the held-out cell among the imputations
        const PredictiveDraws* target_draws = nullptr;
        for (const auto& d : pred.draws)
            if (d.target.site_index == i && d.target.time == t) target_draws = &d;
        if (!target_draws) throw Error("refit leave-one-out lost its target cell");

        LooRow row;
        row.site_index = i;
        row.time = t;
        row.interval = interval(*target_draws, level);
        row.observed = y.values(i, t - 1);
        row.hit = row.observed >= row.interval.lower && row.observed <= row.interval.upper;
        if (row.hit) report.hits++;
        report.clamp_count += pred.clamp_count;
        total_length += row.interval.length();
        report.rows.push_back(row);
    }
    report.mean_interval_length = report.total > 0 ? total_length / report.total : 0.0;
    return report;
}

std::vector<double> correlation_posterior(const SpaceTimeCoord& a, const SpaceTimeCoord& b,
                                          const Trace& trace, int replicates, Rng& rng) {
    if (replicates < 100)
        throw InvalidInputError("correlation_posterior: at least 100 replicates required");
    if (trace.samples.empty()) throw DegenerateInputError("correlation_posterior: empty trace");
    for (const auto& c : {a, b}) {
        if (c.site_index < 0 || c.site_index >= trace.n_monitored)
            throw InvalidInputError("correlation_posterior: coordinate outside the monitored set");
        if (c.time < 1) throw InvalidInputError("correlation_posterior: time must be >= 1");
    }

    std::vector<double> out;
    out.reserve(trace.samples.size());
    if (a.site_index == b.site_index && a.time == b.time) {
        out.assign(trace.samples.size(), 1.0);
        return out;
    }

    // simulate only the two involved sites; the model's marginal law at a
    // subset of sites is the projection of the full law
    SiteSet pair_sites;
    pair_sites.coords = {trace.sites.coords[static_cast<std::size_t>(a.site_index)],
                         trace.sites.coords[static_cast<std::size_t>(b.site_index)]};
    const bool same_site = a.site_index == b.site_index;
    if (same_site) pair_sites.coords.pop_back();
    const int row_a = 0;
    const int row_b = same_site ? 0 : 1;
    const int T = std::max(a.time, b.time);

    for (std::size_t j = 0; j < trace.samples.size(); ++j) {
        ModelParams p = trace.samples[j].params;
        Eigen::VectorXd mu(pair_sites.n());
        mu(row_a) = p.init_mean(a.site_index);
        if (!same_site) mu(row_b) = p.init_mean(b.site_index);
        p.init_mean = mu;

        Rng sim_rng = rng.split(j);
        double sum_a = 0.0, sum_b = 0.0, sum_aa = 0.0, sum_bb = 0.0, sum_ab = 0.0;
        for (int r = 0; r < replicates; ++r) {
            const SimulationOutput sim = simulate_dataset(p, pair_sites, T, sim_rng);
            const double ya = sim.observed.values(row_a, a.time - 1);
            const double yb = sim.observed.values(row_b, b.time - 1);
            sum_a += ya;
            sum_b += yb;
            sum_aa += ya * ya;
            sum_bb += yb * yb;
            sum_ab += ya * yb;
        }
        const double inv = 1.0 / replicates;
        const double var_a = sum_aa * inv - (sum_a * inv) * (sum_a * inv);
        const double var_b = sum_bb * inv - (sum_b * inv) * (sum_b * inv);
        const double cov = sum_ab * inv - (sum_a * inv) * (sum_b * inv);
        if (var_a <= 0.0 || var_b <= 0.0) {
            out.push_back(std::numeric_limits<double>::quiet_NaN());  // degenerate variance
        } else {
            out.push_back(cov / std::sqrt(var_a * var_b));
        }
    }
    return out;
}

PredictionResult impute_missing(const ObservationGrid& y, const Trace& trace, Rng& rng,
                                double jitter_rel) {
    std::vector<PredictionTarget> targets;
    for (int t = 1; t <= y.tmax(); ++t)
        for (int i = 0; i < y.n(); ++i)
            if (!y.mask(i, t - 1)) targets.push_back(PredictionTarget::missing_cell(i, t));
    if (targets.empty()) return {};
    return posterior_predictive(targets, trace, y, rng, jitter_rel);
}

}  // namespace gpssm
