#include "gpssm/model.hpp"

#include <cmath>

namespace gpssm {

namespace {

// lagged latent values x(i, t-1) for t = 1..T, in stacking order
std::vector<double> lagged_values(const LatentField& x) {
    const int n = x.n();
    const int T = x.tmax();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n) * T);
    for (int t = 1; t <= T; ++t)
        for (int i = 0; i < n; ++i) out.push_back(x.values(i, t - 1));
    return out;
}

std::vector<double> contemporaneous_values(const LatentField& x) {
    const int n = x.n();
    const int T = x.tmax();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n) * T);
    for (int t = 1; t <= T; ++t)
        for (int i = 0; i < n; ++i) out.push_back(x.values(i, t));
    return out;
}

void add_spatial_blocks(Eigen::MatrixXd& m, const Eigen::MatrixXd& spatial, int n, int T) {
    for (int t = 0; t < T; ++t) m.block(t * n, t * n, n, n) += spatial;
}

}  // namespace

GramMatrix transition_covariance(const LatentField& x, const ModelParams& p, const SiteSet& s,
                                 double jitter_rel) {
    x.validate();
    s.validate();
    p.validate(s.n());
    if (x.n() != s.n()) throw InvalidInputError("transition_covariance: site count mismatch");

    const int n = s.n();
    const int T = x.tmax();
    GramMatrix evo_noise = gram(p.evo_noise, s.coords, jitter_rel * p.evo_noise.variance);
    GramMatrix g = gram(p.evo_fn, lagged_values(x), jitter_rel * p.evo_fn.variance);
    add_spatial_blocks(g.entries, evo_noise.entries, n, T);
    g.jitter += evo_noise.jitter;
    return g;
}

GramMatrix observation_covariance(const LatentField& x, const ModelParams& p, const SiteSet& s,
                                  double jitter_rel) {
    x.validate();
    s.validate();
    p.validate(s.n());
    if (x.n() != s.n()) throw InvalidInputError("observation_covariance: site count mismatch");

    const int n = s.n();
    const int T = x.tmax();
    GramMatrix obs_noise = gram(p.obs_noise, s.coords, jitter_rel * p.obs_noise.variance);
    GramMatrix g = gram(p.obs_fn, contemporaneous_values(x), jitter_rel * p.obs_fn.variance);
    add_spatial_blocks(g.entries, obs_noise.entries, n, T);
    g.jitter += obs_noise.jitter;
    return g;
}

std::vector<std::pair<int, int>> observed_cells(const ObservationGrid& y) {
    std::vector<std::pair<int, int>> cells;
    for (int t = 1; t <= y.tmax(); ++t)
        for (int i = 0; i < y.n(); ++i)
            if (y.mask(i, t - 1)) cells.emplace_back(i, t);
    return cells;
}

Eigen::MatrixXd observation_covariance_cells(const LatentField& x, const ModelParams& p,
                                             const SiteSet& s,
                                             const std::vector<std::pair<int, int>>& cells,
                                             double jitter_rel) {
    const Eigen::Index m = static_cast<Eigen::Index>(cells.size());
    const double jitter = jitter_rel * (p.obs_fn.variance + p.obs_noise.variance);
    Eigen::MatrixXd cov(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const auto [ia, ta] = cells[a];
        for (Eigen::Index b = a; b < m; ++b) {
            const auto [ib, tb] = cells[b];
            double v = eval_sqexp(p.obs_fn, x.values(ia, ta), x.values(ib, tb));
            if (ta == tb) v += eval_sqexp(p.obs_noise, s.coords[ia], s.coords[ib]);
            cov(a, b) = v;
            cov(b, a) = v;
        }
        cov(a, a) += jitter;
    }
    return cov;
}

Eigen::VectorXd observation_mean_cells(const LatentField& x, const ModelParams& p,
                                       const std::vector<std::pair<int, int>>& cells) {
    Eigen::VectorXd mean(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t a = 0; a < cells.size(); ++a)
        mean(static_cast<Eigen::Index>(a)) =
            p.obs_intercept + p.obs_slope * x.values(cells[a].first, cells[a].second);
    return mean;
}

double state_log_density(const LatentField& x, const ModelParams& p, const SiteSet& s,
                         double jitter_rel) {
    x.validate();
    s.validate();
    p.validate(s.n());
    if (x.n() != s.n()) throw InvalidInputError("state_log_density: site count mismatch");

    const int n = s.n();
    const int T = x.tmax();

    GramMatrix init_cov = gram(p.init, s.coords, jitter_rel * p.init.variance);
    CholFactor init_chol(init_cov.entries);
    const double log_init = mvn_log_density_residual(init_chol, x.values.col(0) - p.init_mean);

    GramMatrix trans = transition_covariance(x, p, s, jitter_rel);
    CholFactor trans_chol(trans.entries);
    Eigen::VectorXd resid(static_cast<Eigen::Index>(n) * T);
    for (int t = 1; t <= T; ++t)
        for (int i = 0; i < n; ++i)
            resid(stack_index(n, i, t)) =
                x.values(i, t) - p.evo_intercept - p.evo_slope * x.values(i, t - 1);
    const double log_trans = mvn_log_density_residual(trans_chol, resid);

    return log_init + log_trans;
}

double obs_log_density_given_state(const ObservationGrid& y, const LatentField& x,
                                   const ModelParams& p, const SiteSet& s, double jitter_rel) {
    y.validate();
    x.validate();
    s.validate();
    p.validate(s.n());
    if (y.n() != s.n() || x.n() != s.n())
        throw InvalidInputError("obs_log_density: site count mismatch");
    if (x.tmax() < y.tmax())
        throw InvalidInputError("obs_log_density: latent field shorter than observations");

    const auto cells = observed_cells(y);
    if (cells.empty()) throw DegenerateInputError("obs_log_density: all cells missing");

    Eigen::MatrixXd cov = observation_covariance_cells(x, p, s, cells, jitter_rel);
    CholFactor chol(cov);
    Eigen::VectorXd resid(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t a = 0; a < cells.size(); ++a) {
        const auto [i, t] = cells[a];
        resid(static_cast<Eigen::Index>(a)) =
            y.values(i, t - 1) - p.obs_intercept - p.obs_slope * x.values(i, t);
    }
    return mvn_log_density_residual(chol, resid);
}

namespace {

// sum_{k=0}^{m-1} r^k, exact at r = 1
double geometric_partial_sum(double r, int m) {
    double sum = 0.0;
    double term = 1.0;
    for (int k = 0; k < m; ++k) {
        sum += term;
        term *= r;
    }
    return sum;
}

}  // namespace

LinearGaussianMoments linear_obs_moments(const ModelParams& p, const SiteSet& s, int T) {
    s.validate();
    p.validate(s.n());
    if (T < 1) throw InvalidInputError("linear_obs_moments: T must be >= 1");
    if (p.obs_fn.variance != 0.0 || p.evo_fn.variance != 0.0)
        throw InvalidInputError("linear_obs_moments: process variances must be zero");

    const int n = s.n();
    const double b = p.evo_slope;
    LinearGaussianMoments mo;
    mo.mean.resize(static_cast<Eigen::Index>(n) * T);
    mo.cov.resize(static_cast<Eigen::Index>(n) * T, static_cast<Eigen::Index>(n) * T);

    // powers of the evolution slope up to 2T
    std::vector<double> bp(static_cast<std::size_t>(2 * T + 1));
    bp[0] = 1.0;
    for (int k = 1; k <= 2 * T; ++k) bp[k] = bp[k - 1] * b;

    for (int t = 1; t <= T; ++t) {
        const double drift = p.evo_intercept * geometric_partial_sum(b, t);
        for (int i = 0; i < n; ++i)
            mo.mean(stack_index(n, i, t)) =
                p.obs_intercept + p.obs_slope * (bp[t] * p.init_mean(i) + drift);
    }

    const double bf2 = p.obs_slope * p.obs_slope;
    for (int t1 = 1; t1 <= T; ++t1) {
        for (int t2 = t1; t2 <= T; ++t2) {
            // sum of b^{t1+t2-2k} for k = 1..min(t1,t2)
            const int mmin = t1;  // t1 <= t2 here
            double acc = 0.0;
            for (int k = 1; k <= mmin; ++k) acc += bp[t1 + t2 - 2 * k];
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    double v = bp[t1 + t2] * eval_sqexp(p.init, s.coords[i], s.coords[j]) +
                               acc * eval_sqexp(p.evo_noise, s.coords[i], s.coords[j]);
                    v *= bf2;
                    if (t1 == t2) v += eval_sqexp(p.obs_noise, s.coords[i], s.coords[j]);
                    mo.cov(stack_index(n, i, t1), stack_index(n, j, t2)) = v;
                    mo.cov(stack_index(n, j, t2), stack_index(n, i, t1)) = v;
                }
            }
        }
    }
    return mo;
}

double closed_form_obs_log_density_linear(const ObservationGrid& y, const ModelParams& p,
                                          const SiteSet& s) {
    y.validate();
    if (p.obs_fn.variance != 0.0 || p.evo_fn.variance != 0.0)
        throw InvalidInputError(
            "closed_form_obs_log_density_linear: requires zero process variances");

    const auto cells = observed_cells(y);
    if (cells.empty())
        throw DegenerateInputError("closed_form_obs_log_density_linear: all cells missing");

    LinearGaussianMoments mo = linear_obs_moments(p, s, y.tmax());
    const int n = y.n();
    const Eigen::Index m = static_cast<Eigen::Index>(cells.size());
    Eigen::VectorXd resid(m);
    Eigen::MatrixXd cov(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const auto [ia, ta] = cells[a];
        resid(a) = y.values(ia, ta - 1) - mo.mean(stack_index(n, ia, ta));
        for (Eigen::Index b = 0; b < m; ++b) {
            const auto [ib, tb] = cells[b];
            cov(a, b) = mo.cov(stack_index(n, ia, ta), stack_index(n, ib, tb));
        }
    }
    CholFactor chol(cov);
    return mvn_log_density_residual(chol, resid);
}

double approx_covariance_geometric(const ModelParams& p, const Eigen::Vector2d& a,
                                   const Eigen::Vector2d& b, int t, int tstar) {
    if (std::abs(p.evo_slope) >= 1.0)
        throw InvalidInputError("approx_covariance_geometric: requires |evo_slope| < 1");
    if (t < 0 || tstar < 0)
        throw InvalidInputError("approx_covariance_geometric: negative time index");
    if (tstar > t) std::swap(t, tstar);

    const double beta = p.evo_slope;
    const double lag_factor = std::pow(beta, t - tstar);
    const double eta_weight =
        (1.0 - std::pow(beta, 2 * (tstar + 1))) / (1.0 - beta * beta);
    double cov = p.obs_slope * p.obs_slope * lag_factor *
                 (eval_sqexp(p.init, a, b) + eta_weight * eval_sqexp(p.evo_noise, a, b));
    if (t == tstar) cov += eval_sqexp(p.obs_noise, a, b);
    return cov;
}

}  // namespace gpssm
