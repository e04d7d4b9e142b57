#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gpssm/model.hpp"
#include "gpssm/simulate.hpp"
#include "support/oracles.hpp"

using namespace gpssm;

namespace {

ModelParams paper_style_params(int n) {
    ModelParams p;
    p.obs_intercept = -4.1;
    p.obs_slope = 0.51;
    p.evo_intercept = 5.1;
    p.evo_slope = 0.64;
    p.obs_fn = {1.0, 4.3};
    p.evo_fn = {1.0, 2.4};
    p.obs_noise = {16.0, 6.25};
    p.evo_noise = {24.01, 6.25};
    p.init = {33.64, 4.0};
    p.init_mean = Eigen::VectorXd::Zero(n);
    return p;
}

SiteSet random_sites(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    SiteSet s;
    for (int i = 0; i < n; ++i) s.coords.emplace_back(ud(gen), ud(gen));
    return s;
}

}  // namespace

TEST_CASE("initial layer draws") {
    SUBCASE("degenerate covariance collapses on the mean") {
        SiteSet s = random_sites(3, 1);
        ModelParams p = paper_style_params(3);
        p.init = {1e-12, 4.0};
        p.init_mean << 1.0, -2.0, 0.5;
        Rng rng(42);
        const Eigen::VectorXd draw = draw_initial_layer(p, s, rng);
        CHECK((draw - p.init_mean).cwiseAbs().maxCoeff() < 1e-3);
    }
    SUBCASE("exactly zero variance returns the mean") {
        SiteSet s = random_sites(2, 2);
        ModelParams p = paper_style_params(2);
        p.init.variance = 0.0;
        p.init_mean << 0.3, 0.7;
        Rng rng(7);
        CHECK(draw_initial_layer(p, s, rng) == p.init_mean);
    }
    SUBCASE("fixed seed repeats bit-identically") {
        SiteSet s = random_sites(4, 3);
        ModelParams p = paper_style_params(4);
        Rng a(99), b(99);
        CHECK(draw_initial_layer(p, s, a) == draw_initial_layer(p, s, b));
    }
    SUBCASE("sample moments match the mean and covariance") {
        SiteSet s = random_sites(2, 4);
        ModelParams p = paper_style_params(2);
        p.init_mean << 1.5, -0.5;
        Rng rng(123);
        const int N = 10000;
        Eigen::MatrixXd draws(2, N);
        for (int k = 0; k < N; ++k) draws.col(k) = draw_initial_layer(p, s, rng);
        const Eigen::Vector2d mean = draws.rowwise().mean();
        Eigen::MatrixXd centered = draws.colwise() - mean;
        const Eigen::Matrix2d cov = centered * centered.transpose() / double(N - 1);
        Eigen::Matrix2d expected;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                expected(i, j) = oracle::sqexp(p.init.variance, p.init.decay,
                                               (s.coords[size_t(i)] - s.coords[size_t(j)]).squaredNorm());
        for (int i = 0; i < 2; ++i) {
            const double se = std::sqrt(expected(i, i) / N);
            CHECK(std::abs(mean(i) - p.init_mean(i)) < 4.0 * se);
            for (int j = 0; j < 2; ++j) {
                const double se_cov = std::sqrt(
                    (expected(i, i) * expected(j, j) + expected(i, j) * expected(i, j)) / N);
                CHECK(std::abs(cov(i, j) - expected(i, j)) < 4.0 * se_cov);
            }
        }
    }
}

TEST_CASE("conditional GP draws") {
    const GpMean mean{0.4, 0.9};
    const KernelParams kernel{1.3, 0.7};

    SUBCASE("empty history yields the unconditional marginal") {
        Rng rng(5);
        const int N = 20000;
        std::vector<double> values;
        for (int k = 0; k < N; ++k) {
            GpHistory h;
            values.push_back(conditional_gp_draw(h, mean, kernel, {0.8}, rng)(0));
        }
        const auto st = oracle::stats_of(values);
        CHECK(std::abs(st.mean - mean(0.8)) < 4.0 * st.se_mean);
        CHECK(st.var == doctest::Approx(kernel.variance).epsilon(0.1));
    }
    SUBCASE("redrawing at a revealed point returns the stored value") {
        Rng rng(6);
        GpHistory h;
        const double v = conditional_gp_draw(h, mean, kernel, {1.1}, rng)(0);
        const double again = conditional_gp_draw(h, mean, kernel, {1.1}, rng)(0);
        CHECK(again == v);
        // within merge tolerance as well
        const double nearby = conditional_gp_draw(h, mean, kernel, {1.1 + 5e-9}, rng)(0);
        CHECK(std::abs(nearby - v) < 1e-3);
    }
    SUBCASE("one-point history matches the scalar conditioning formula") {
        const double x1 = 0.5, v1 = 1.7, xs = 1.2;
        const double jitter = 1e-8 * kernel.variance;
        const double c = oracle::sqexp(kernel.variance, kernel.decay, (xs - x1) * (xs - x1));
        const double cond_mean = mean(xs) + c / (kernel.variance + jitter) * (v1 - mean(x1));
        const double cond_var =
            kernel.variance + jitter - c * c / (kernel.variance + jitter);

        Rng rng(8);
        const int N = 20000;
        std::vector<double> values;
        for (int k = 0; k < N; ++k) {
            GpHistory h;
            h.inputs = {x1};
            h.outputs = {v1};
            values.push_back(conditional_gp_draw(h, mean, kernel, {xs}, rng)(0));
        }
        const auto st = oracle::stats_of(values);
        CHECK(std::abs(st.mean - cond_mean) < 4.0 * st.se_mean);
        CHECK(st.var == doctest::Approx(cond_var).epsilon(0.1));
    }
    SUBCASE("zero variance makes the function its mean") {
        Rng rng(9);
        GpHistory h;
        const Eigen::VectorXd v =
            conditional_gp_draw(h, mean, KernelParams{0.0, 1.0}, {0.0, 2.0}, rng);
        CHECK(v(0) == mean(0.0));
        CHECK(v(1) == mean(2.0));
        CHECK(h.inputs.empty());
    }
}

TEST_CASE("simulate_dataset") {
    SUBCASE("fixed seed reproduces") {
        SiteSet s = random_sites(3, 10);
        ModelParams p = paper_style_params(3);
        Rng a(77), b(77);
        const SimulationOutput ra = simulate_dataset(p, s, 4, a);
        const SimulationOutput rb = simulate_dataset(p, s, 4, b);
        CHECK(ra.latent.values == rb.latent.values);
        CHECK(ra.observed.values == rb.observed.values);
    }
    SUBCASE("linear reduction matches the closed-form moments") {
        SiteSet s = random_sites(2, 11);
        ModelParams p = paper_style_params(2);
        p.obs_intercept = 0.0;
        p.obs_slope = 1.0;
        p.evo_intercept = 0.0;
        p.evo_slope = 1.0;
        p.obs_fn.variance = 0.0;
        p.evo_fn.variance = 0.0;
        p.obs_noise = {1.2, 2.0};
        p.evo_noise = {0.8, 1.5};
        p.init = {1.0, 1.0};
        p.init_mean << 0.4, -0.6;
        const int T = 2;
        const auto mo = linear_obs_moments(p, s, T);

        Rng rng(2024);
        const int N = 10000;
        Eigen::MatrixXd stacked(4, N);
        for (int k = 0; k < N; ++k) {
            const SimulationOutput sim = simulate_dataset(p, s, T, rng);
            for (int t = 1; t <= T; ++t)
                for (int i = 0; i < 2; ++i)
                    stacked((t - 1) * 2 + i, k) = sim.observed.values(i, t - 1);
        }
        const Eigen::VectorXd mean = stacked.rowwise().mean();
        Eigen::MatrixXd centered = stacked.colwise() - mean;
        const Eigen::MatrixXd cov = centered * centered.transpose() / double(N - 1);
        for (int a = 0; a < 4; ++a) {
            const double se = std::sqrt(mo.cov(a, a) / N);
            CHECK(std::abs(mean(a) - mo.mean(a)) < 4.0 * se);
            for (int b = 0; b < 4; ++b) {
                const double se_cov =
                    std::sqrt((mo.cov(a, a) * mo.cov(b, b) + mo.cov(a, b) * mo.cov(a, b)) / N);
                CHECK(std::abs(cov(a, b) - mo.cov(a, b)) < 4.0 * se_cov);
            }
        }
    }
    SUBCASE("reference configuration runs at scale") {
        SiteSet s = random_sites(15, 12);
        ModelParams p = paper_style_params(15);
        std::mt19937 gen(13);
        std::normal_distribution<double> nd;
        for (int i = 0; i < 15; ++i) p.init_mean(i) = nd(gen);
        Rng rng(555);
        const SimulationOutput sim = simulate_dataset(p, s, 20, rng);
        CHECK(sim.latent.values.rows() == 15);
        CHECK(sim.latent.values.cols() == 21);
        CHECK(sim.observed.values.rows() == 15);
        CHECK(sim.observed.values.cols() == 20);
        CHECK(sim.latent.values.allFinite());
        CHECK(sim.observed.values.allFinite());
    }
    SUBCASE("the evolution function is one coherent sample path") {
        SiteSet s = random_sites(3, 14);
        ModelParams p = paper_style_params(3);
        Rng rng(31);
        SimulationOutput sim = simulate_dataset(p, s, 5, rng);
        REQUIRE(!sim.evo_history.inputs.empty());
        // re-query the revealed evolution function at stored inputs
        const GpMean evo_mean{p.evo_intercept, p.evo_slope};
        for (std::size_t k = 0; k < sim.evo_history.inputs.size(); k += 3) {
            GpHistory h = sim.evo_history;
            Rng probe(1000 + unsigned(k));
            const double v =
                conditional_gp_draw(h, evo_mean, p.evo_fn, {sim.evo_history.inputs[k]}, probe)(0);
            CHECK(std::abs(v - sim.evo_history.outputs[k]) < 1e-3);
        }
    }
    SUBCASE("kernel variance scaling scales the centered moments") {
        SiteSet s = random_sites(1, 15);
        ModelParams p = paper_style_params(1);
        p.obs_intercept = 0.0;
        p.obs_slope = 1.0;
        p.evo_intercept = 0.0;
        p.evo_slope = 1.0;
        p.obs_fn.variance = 0.0;
        p.evo_fn.variance = 0.0;
        p.obs_noise = {0.9, 2.0};
        p.evo_noise = {0.7, 1.5};
        p.init = {1.1, 1.0};
        p.init_mean(0) = 0.25;

        const double c = 2.0;
        ModelParams scaled = p;
        scaled.obs_noise.variance *= c * c;
        scaled.evo_noise.variance *= c * c;
        scaled.init.variance *= c * c;

        const int N = 10000, T = 2;
        auto sample_vars = [&](const ModelParams& pp, unsigned seed) {
            Rng rng(seed);
            std::vector<double> y1, y2;
            for (int k = 0; k < N; ++k) {
                const SimulationOutput sim = simulate_dataset(pp, s, T, rng);
                y1.push_back(sim.observed.values(0, 0));
                y2.push_back(sim.observed.values(0, 1));
            }
            return std::pair{oracle::stats_of(y1).var, oracle::stats_of(y2).var};
        };
        const auto [v1, v2] = sample_vars(p, 71);
        const auto [w1, w2] = sample_vars(scaled, 72);
        CHECK(w1 / v1 == doctest::Approx(c * c).epsilon(0.08));
        CHECK(w2 / v2 == doctest::Approx(c * c).epsilon(0.08));
    }
    SUBCASE("simulated transition layer matches the exact density") {
        // pin the initial layer, simulate the next one, compare the
        // empirical distribution with exp(state_log_density) on a grid
        SiteSet s;
        s.coords = {{0.0, 0.0}};
        ModelParams p = paper_style_params(1);
        p.init = {1e-14, 1.0};
        p.init_mean(0) = 0.6;
        p.obs_fn.variance = 0.0;
        p.evo_fn = {0.8, 1.1};
        p.evo_noise = {0.5, 1.0};

        Rng rng(404);
        const int N = 100000;
        std::vector<double> draws;
        draws.reserve(N);
        for (int k = 0; k < N; ++k)
            draws.push_back(simulate_dataset(p, s, 1, rng).latent.values(0, 1));
        std::sort(draws.begin(), draws.end());

        // transition density on a grid, normalized numerically
        const double m = p.evo_intercept + p.evo_slope * 0.6;
        const double sd = std::sqrt(p.evo_fn.variance + p.evo_noise.variance);
        const int G = 4001;
        const double lo = m - 10.0 * sd, hi = m + 10.0 * sd;
        std::vector<double> grid(G), pdf(G), cdf(G);
        LatentField x;
        x.values.resize(1, 2);
        x.values(0, 0) = 0.6;
        for (int g = 0; g < G; ++g) {
            grid[size_t(g)] = lo + (hi - lo) * g / (G - 1);
            x.values(0, 1) = grid[size_t(g)];
            pdf[size_t(g)] = std::exp(state_log_density(x, p, s) -
                                      oracle::normal_logpdf(0.6, 0.6, p.init.variance));
        }
        cdf[0] = 0.0;
        for (int g = 1; g < G; ++g)
            cdf[size_t(g)] = cdf[size_t(g) - 1] +
                             0.5 * (pdf[size_t(g)] + pdf[size_t(g) - 1]) * (grid[size_t(g)] - grid[size_t(g) - 1]);
        for (int g = 0; g < G; ++g) cdf[size_t(g)] /= cdf[size_t(G) - 1];

        double ks = 0.0;
        for (int k = 0; k < N; ++k) {
            const double u_emp = (k + 1.0) / N;
            const double v = draws[size_t(k)];
            const auto it = std::lower_bound(grid.begin(), grid.end(), v);
            const std::size_t gi = std::min(size_t(it - grid.begin()), size_t(G - 1));
            ks = std::max(ks, std::abs(u_emp - cdf[gi]));
        }
        CHECK(ks < 1.63 / std::sqrt(double(N)) + 2e-3);
    }
}

TEST_CASE("nonlinear benchmark") {
    SUBCASE("evolution map hand values") {
        CHECK(nonlinear_evolution_truth(0.0) == doctest::Approx(-1.1).epsilon(1e-14));
        const double at2 = -1.1 + 1.0 + 3.0 * std::sin(M_PI / 2.0) - 5.0 * std::sin(2.0 * M_PI / 5.0);
        CHECK(nonlinear_evolution_truth(2.0) == doctest::Approx(at2).epsilon(1e-14));
        CHECK(nonlinear_evolution_truth(2.0) == doctest::Approx(-1.8552825814757748).epsilon(1e-10));
        CHECK(nonlinear_evolution_truth(20.0) == doctest::Approx(8.9).epsilon(1e-12));
    }
    SUBCASE("suppressed noise follows the deterministic recursion") {
        SiteSet s = random_sites(3, 16);
        NonlinearBenchmarkKernels k;
        k.obs_noise.variance = 1e-12;
        k.evo_noise.variance = 1e-12;
        k.init.variance = 1e-12;
        Rng rng(17);
        const SimulationOutput sim = simulate_nonlinear_benchmark(s, 2, rng, k);
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(sim.latent.values(i, 0)) < 1e-3);
            CHECK(sim.latent.values(i, 1) == doctest::Approx(-1.1).epsilon(1e-3));
            CHECK(sim.observed.values(i, 0) == doctest::Approx(-4.1 + 0.7 * -1.1).epsilon(1e-3));
        }
    }
    SUBCASE("fixed seed reproduces") {
        SiteSet s = random_sites(4, 18);
        Rng a(3), b(3);
        CHECK(simulate_nonlinear_benchmark(s, 3, a).observed.values ==
              simulate_nonlinear_benchmark(s, 3, b).observed.values);
    }
    SUBCASE("default run stays finite and follows the evolution map") {
        SiteSet s = random_sites(20, 19);
        Rng rng(20);
        const SimulationOutput sim = simulate_nonlinear_benchmark(s, 20, rng);
        CHECK(sim.latent.values.allFinite());
        CHECK(sim.observed.values.allFinite());
        // evolution residuals are the spatial noise: bounded by a generous
        // multiple of its standard deviation
        const double sd = 3.9;
        for (int i = 0; i < 20; ++i)
            for (int t = 1; t <= 20; ++t) {
                const double resid =
                    sim.latent.values(i, t) - nonlinear_evolution_truth(sim.latent.values(i, t - 1));
                CHECK(std::abs(resid) < 8.0 * sd);
            }
    }
}
