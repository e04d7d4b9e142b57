#include "gpssm/simulate.hpp"

#include <cmath>

#include "gpssm/kernels.hpp"

namespace gpssm {

namespace {

// Incrementally extensible Cholesky of the history Gram matrix, kept
// together with the whitened residual so scalar conditionals are O(h^2).
class GpConditioner {
  public:
    GpConditioner(const GpHistory& history, const GpMean& mean, const KernelParams& kernel,
                  double jitter)
        : mean_(mean), kernel_(kernel), jitter_(jitter) {
        for (std::size_t i = 0; i < history.inputs.size(); ++i)
            append(history.inputs[i], history.outputs[i]);
    }

    // index of a revealed input within merge tolerance, or -1
    int find_merge(double x) const {
        for (std::size_t i = 0; i < inputs_.size(); ++i)
            if (std::abs(inputs_[i] - x) < kGpMergeTol) return static_cast<int>(i);
        return -1;
    }

    double output_at(int idx) const { return outputs_[static_cast<std::size_t>(idx)]; }

    // conditional mean and variance of the GP at x given the history
    std::pair<double, double> conditional(double x) const {
        const Eigen::Index h = static_cast<Eigen::Index>(inputs_.size());
        if (h == 0) return {mean_(x), kernel_.variance + jitter_};
        Eigen::VectorXd k(h);
        for (Eigen::Index i = 0; i < h; ++i)
            k(i) = eval_sqexp(kernel_, x, inputs_[static_cast<std::size_t>(i)]);
        const Eigen::VectorXd a =
            chol_.topLeftCorner(h, h).triangularView<Eigen::Lower>().solve(k);
        const double mean = mean_(x) + a.dot(white_.head(h));
        const double var = kernel_.variance + jitter_ - a.squaredNorm();
        return {mean, var};
    }

    void append(double x, double value) {
        const Eigen::Index h = static_cast<Eigen::Index>(inputs_.size());
        if (chol_.rows() <= h) {
            const Eigen::Index cap = std::max<Eigen::Index>(2 * chol_.rows(), 16);
            Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(cap, cap);
            grown.topLeftCorner(chol_.rows(), chol_.cols()) = chol_;
            chol_.swap(grown);
            Eigen::VectorXd w = Eigen::VectorXd::Zero(cap);
            w.head(white_.size()) = white_;
            white_.swap(w);
        }
        Eigen::VectorXd a(h);
        if (h > 0) {
            Eigen::VectorXd k(h);
            for (Eigen::Index i = 0; i < h; ++i)
                k(i) = eval_sqexp(kernel_, x, inputs_[static_cast<std::size_t>(i)]);
            a = chol_.topLeftCorner(h, h).triangularView<Eigen::Lower>().solve(k);
        }
        const double d2 = kernel_.variance + jitter_ - a.squaredNorm();
        if (!(d2 > 0.0))
            throw IllConditionedError("GP history Gram not positive definite", d2);
        const double d = std::sqrt(d2);
        chol_.row(h).head(h) = a.transpose();
        chol_(h, h) = d;
        white_(h) = (value - mean_(x) - a.dot(white_.head(h))) / d;
        inputs_.push_back(x);
        outputs_.push_back(value);
    }

    const std::vector<double>& inputs() const { return inputs_; }
    const std::vector<double>& outputs() const { return outputs_; }

  private:
    GpMean mean_;
    KernelParams kernel_;
    double jitter_;
    std::vector<double> inputs_;
    std::vector<double> outputs_;
    Eigen::MatrixXd chol_{0, 0};
    Eigen::VectorXd white_{0};
};

}  // namespace

Eigen::VectorXd conditional_gp_draw(GpHistory& history, const GpMean& mean,
                                    const KernelParams& kernel,
                                    const std::vector<double>& new_inputs, Rng& rng,
                                    double jitter_rel) {
    kernel.validate();
    if (history.inputs.size() != history.outputs.size())
        throw InvalidInputError("conditional_gp_draw: inconsistent history");
    for (double x : new_inputs)
        if (!std::isfinite(x)) throw InvalidInputError("conditional_gp_draw: non-finite input");

    Eigen::VectorXd values(static_cast<Eigen::Index>(new_inputs.size()));
    if (kernel.variance == 0.0) {
        // degenerate GP: the function equals its mean
        for (std::size_t q = 0; q < new_inputs.size(); ++q)
            values(static_cast<Eigen::Index>(q)) = mean(new_inputs[q]);
        return values;
    }

    GpConditioner cond(history, mean, kernel, jitter_rel * kernel.variance);
    for (std::size_t q = 0; q < new_inputs.size(); ++q) {
        const double x = new_inputs[q];
        const int merged = cond.find_merge(x);
        if (merged >= 0) {
            values(static_cast<Eigen::Index>(q)) = cond.output_at(merged);
            continue;
        }
        const auto [m, v] = cond.conditional(x);
        const double value = m + std::sqrt(std::max(v, 0.0)) * rng.normal();
        cond.append(x, value);
        values(static_cast<Eigen::Index>(q)) = value;
    }
    history.inputs = cond.inputs();
    history.outputs = cond.outputs();
    return values;
}

Eigen::VectorXd draw_initial_layer(const ModelParams& p, const SiteSet& s, Rng& rng,
                                   double jitter_rel) {
    s.validate();
    p.validate(s.n());
    if (p.init.variance == 0.0) return p.init_mean;
    GramMatrix g = gram(p.init, s.coords, jitter_rel * p.init.variance);
    CholFactor chol(g.entries);
    Eigen::VectorXd z(s.n());
    for (int i = 0; i < s.n(); ++i) z(i) = rng.normal();
    return p.init_mean + chol.scale(z);
}

SimulationOutput simulate_dataset(const ModelParams& p, const SiteSet& s, int T, Rng& rng,
                                  double jitter_rel) {
    s.validate();
    p.validate(s.n());
    if (T < 1) throw InvalidInputError("simulate_dataset: T must be >= 1");

    const int n = s.n();
    SimulationOutput out;
    out.seed = rng.seed();
    out.latent.values.resize(n, T + 1);
    out.latent.values.col(0) = draw_initial_layer(p, s, rng, jitter_rel);

    CholFactor evo_noise_chol(gram(p.evo_noise, s.coords, jitter_rel * p.evo_noise.variance).entries);
    const GpMean evo_mean{p.evo_intercept, p.evo_slope};
    std::vector<double> layer(static_cast<std::size_t>(n));
    for (int t = 1; t <= T; ++t) {
        for (int i = 0; i < n; ++i) layer[static_cast<std::size_t>(i)] = out.latent.values(i, t - 1);
        const Eigen::VectorXd evolved =
            conditional_gp_draw(out.evo_history, evo_mean, p.evo_fn, layer, rng, jitter_rel);
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z(i) = rng.normal();
        out.latent.values.col(t) = evolved + evo_noise_chol.scale(z);
    }

    // reveal the observation GP jointly across all latent coordinates
    std::vector<double> all_latents;
    all_latents.reserve(static_cast<std::size_t>(n) * T);
    for (int t = 1; t <= T; ++t)
        for (int i = 0; i < n; ++i) all_latents.push_back(out.latent.values(i, t));
    const GpMean obs_mean{p.obs_intercept, p.obs_slope};
    const Eigen::VectorXd transformed =
        conditional_gp_draw(out.obs_history, obs_mean, p.obs_fn, all_latents, rng, jitter_rel);

    CholFactor obs_noise_chol(gram(p.obs_noise, s.coords, jitter_rel * p.obs_noise.variance).entries);
    Eigen::MatrixXd y(n, T);
    for (int t = 1; t <= T; ++t) {
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z(i) = rng.normal();
        const Eigen::VectorXd noise = obs_noise_chol.scale(z);
        for (int i = 0; i < n; ++i)
            y(i, t - 1) = transformed(static_cast<Eigen::Index>(t - 1) * n + i) + noise(i);
    }
    out.observed = ObservationGrid::fully_observed(y);
    return out;
}

double nonlinear_evolution_truth(double x) {
    if (!std::isfinite(x)) throw InvalidInputError("nonlinear_evolution_truth: non-finite input");
    return -1.1 + 0.5 * x + 3.0 * std::sin(M_PI * x / 4.0) - 5.0 * std::sin(M_PI * x / 5.0);
}

SimulationOutput simulate_nonlinear_benchmark(const SiteSet& s, int T, Rng& rng,
                                              const NonlinearBenchmarkKernels& k,
                                              double jitter_rel) {
    s.validate();
    if (T < 1) throw InvalidInputError("simulate_nonlinear_benchmark: T must be >= 1");

    const int n = s.n();
    SimulationOutput out;
    out.seed = rng.seed();
    out.latent.values.resize(n, T + 1);

    CholFactor init_chol(gram(k.init, s.coords, jitter_rel * k.init.variance).entries);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.normal();
    out.latent.values.col(0) = init_chol.scale(z);

    CholFactor evo_noise_chol(gram(k.evo_noise, s.coords, jitter_rel * k.evo_noise.variance).entries);
    for (int t = 1; t <= T; ++t) {
        for (int i = 0; i < n; ++i) z(i) = rng.normal();
        const Eigen::VectorXd noise = evo_noise_chol.scale(z);
        for (int i = 0; i < n; ++i)
            out.latent.values(i, t) = nonlinear_evolution_truth(out.latent.values(i, t - 1)) + noise(i);
    }

    CholFactor obs_noise_chol(gram(k.obs_noise, s.coords, jitter_rel * k.obs_noise.variance).entries);
    Eigen::MatrixXd y(n, T);
    for (int t = 1; t <= T; ++t) {
        for (int i = 0; i < n; ++i) z(i) = rng.normal();
        const Eigen::VectorXd noise = obs_noise_chol.scale(z);
        for (int i = 0; i < n; ++i) y(i, t - 1) = -4.1 + 0.7 * out.latent.values(i, t) + noise(i);
    }
    out.observed = ObservationGrid::fully_observed(y);
    return out;
}

}  // namespace gpssm
