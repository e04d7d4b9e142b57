#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "gpssm/mcmc.hpp"
#include "gpssm/model.hpp"
#include "gpssm/pipeline.hpp"
#include "gpssm/predict.hpp"
#include "gpssm/simulate.hpp"
#include "gpssm/trace_io.hpp"

using namespace gpssm;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ModelParams reference_sim_params(int n) {
    // simulation-study parameter set: scale parameters are standard
    // deviations, stored here as variances
    ModelParams p;
    p.obs_intercept = -4.1;
    p.obs_slope = 0.51;
    p.evo_intercept = 5.1;
    p.evo_slope = 0.64;
    p.obs_fn = {1.0, 4.3};        // sd 1.0
    p.evo_fn = {1.0, 2.4};        // sd 1.0
    p.obs_noise = {16.0, 6.25};   // sd 4.0
    p.evo_noise = {24.01, 6.25};  // sd 4.9
    p.init = {33.64, 4.0};        // sd 5.8
    p.init_mean = Eigen::VectorXd::Zero(n);
    return p;
}

KernelParams kernel_from_json(const json& j, const char* name) {
    if (!j.contains(name)) throw ConfigError(std::string("params: missing kernel ") + name);
    return {j.at(name).at("variance").get<double>(), j.at(name).at("decay").get<double>()};
}

ModelParams params_from_json(const json& j, int n) {
    ModelParams p = reference_sim_params(n);
    if (j.contains("obs_intercept")) p.obs_intercept = j.at("obs_intercept").get<double>();
    if (j.contains("obs_slope")) p.obs_slope = j.at("obs_slope").get<double>();
    if (j.contains("evo_intercept")) p.evo_intercept = j.at("evo_intercept").get<double>();
    if (j.contains("evo_slope")) p.evo_slope = j.at("evo_slope").get<double>();
    if (j.contains("obs_fn")) p.obs_fn = kernel_from_json(j, "obs_fn");
    if (j.contains("evo_fn")) p.evo_fn = kernel_from_json(j, "evo_fn");
    if (j.contains("obs_noise")) p.obs_noise = kernel_from_json(j, "obs_noise");
    if (j.contains("evo_noise")) p.evo_noise = kernel_from_json(j, "evo_noise");
    if (j.contains("init")) p.init = kernel_from_json(j, "init");
    if (j.contains("init_mean")) {
        const auto v = j.at("init_mean").get<std::vector<double>>();
        if (int(v.size()) != n) throw ConfigError("params: init_mean length mismatch");
        p.init_mean = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
    }
    return p;
}

LogNormalPrior lognormal_from_json(const json& j, const char* name, LogNormalPrior fallback) {
    if (!j.contains(name)) return fallback;
    return {j.at(name).at("location").get<double>(), j.at(name).at("scale").get<double>()};
}

PriorSpec priors_from_json(const json& j) {
    PriorSpec prior;
    if (j.contains("coef_variance")) {
        const double v = j.at("coef_variance").get<double>();
        prior.obs_coef_cov = Eigen::Matrix2d::Identity() * v;
        prior.evo_coef_cov = Eigen::Matrix2d::Identity() * v;
    }
    prior.obs_fn_var = lognormal_from_json(j, "obs_fn_var", prior.obs_fn_var);
    prior.evo_fn_var = lognormal_from_json(j, "evo_fn_var", prior.evo_fn_var);
    prior.obs_noise_var = lognormal_from_json(j, "obs_noise_var", prior.obs_noise_var);
    prior.evo_noise_var = lognormal_from_json(j, "evo_noise_var", prior.evo_noise_var);
    prior.init_var = lognormal_from_json(j, "init_var", prior.init_var);
    prior.obs_fn_decay = lognormal_from_json(j, "obs_fn_decay", prior.obs_fn_decay);
    prior.evo_fn_decay = lognormal_from_json(j, "evo_fn_decay", prior.evo_fn_decay);
    prior.obs_noise_decay = lognormal_from_json(j, "obs_noise_decay", prior.obs_noise_decay);
    prior.evo_noise_decay = lognormal_from_json(j, "evo_noise_decay", prior.evo_noise_decay);
    prior.init_decay = lognormal_from_json(j, "init_decay", prior.init_decay);
    return prior;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return j;
}

SiteSet random_square_sites(int n, double side, Rng& rng) {
    SiteSet s;
    for (int i = 0; i < n; ++i)
        s.coords.emplace_back(side * rng.uniform(), side * rng.uniform());
    return s;
}

std::vector<PredictionTarget> targets_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || (line != "x,y,t" && line != "x,y,t\r"))
        throw DataError(path + ": expected header x,y,t");
    std::vector<PredictionTarget> targets;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string fx, fy, ft;
        if (!std::getline(ss, fx, ',') || !std::getline(ss, fy, ',') || !std::getline(ss, ft, ','))
            throw DataError(path + " line " + std::to_string(line_no) + ": expected x,y,t");
        try {
            targets.push_back(PredictionTarget::at_new_site(
                {std::stod(fx), std::stod(fy)}, std::stoi(ft)));
        } catch (const std::exception&) {
            throw DataError(path + " line " + std::to_string(line_no) + ": cannot parse x,y,t");
        }
    }
    return targets;
}

struct LoadedData {
    SiteSet sites;
    ObservationGrid y;
    std::optional<DecomposedData> decomposition;  // stations mode only
};

LoadedData load_data(const std::string& grid_path, const std::string& stations_path) {
    if (grid_path.empty() == stations_path.empty())
        throw ConfigError("exactly one of --grid and --stations is required");
    LoadedData data;
    if (!grid_path.empty()) {
        GridData g = read_grid_csv(grid_path);
        data.sites = g.sites;
        data.y = g.y;
    } else {
        DecomposedData d = detrend_deseasonalize(ingest_csv(stations_path));
        for (const auto& w : d.warnings) std::cerr << "warning: " << w << "\n";
        data.sites = d.sites;
        data.y = d.residual;
        data.decomposition = std::move(d);
    }
    return data;
}

void write_predictions_header(std::ofstream& out, bool with_observed) {
    out << "site_x,site_y,t,lower,median,upper";
    if (with_observed) out << ",observed,hit";
    out << '\n';
}

int station_index_for_site(const Eigen::Vector2d& site, const SiteSet& monitored) {
    for (int i = 0; i < monitored.n(); ++i)
        if ((monitored.coords[size_t(i)] - site).squaredNorm() <= 1e-20) return i;
    return -1;
}

// ---- subcommand payloads -------------------------------------------------

struct SimulateArgs {
    int n = 15;
    int T = 20;
    std::uint64_t seed = 1;
    double square = 2.0;
    std::string out = "grid.csv";
    std::string latent_out;
    std::string params_path;
    std::string mu0_mode = "draw";
};

int run_simulate(const SimulateArgs& a, bool nonlinear) {
    Rng rng(a.seed);
    Rng site_rng = rng.split(1);
    Rng field_rng = rng.split(2);
    SiteSet sites = random_square_sites(a.n, a.square, site_rng);

    SimulationOutput sim;
    if (nonlinear) {
        sim = simulate_nonlinear_benchmark(sites, a.T, field_rng);
    } else {
        ModelParams p = a.params_path.empty()
                            ? reference_sim_params(a.n)
                            : params_from_json(load_json(a.params_path), a.n);
        if (a.mu0_mode == "draw") {
            Rng mu_rng = rng.split(3);
            for (int i = 0; i < a.n; ++i) p.init_mean(i) = mu_rng.normal();
        } else if (a.mu0_mode != "zero") {
            throw ConfigError("--mu0 must be draw or zero");
        }
        sim = simulate_dataset(p, sites, a.T, field_rng);
    }
    write_grid_csv(a.out, sites, sim.observed);
    if (!a.latent_out.empty()) write_latent_csv(a.latent_out, sites, sim.latent);
    std::cout << "wrote " << a.out << " (" << a.n << " sites x " << a.T << " steps)\n";
    return 0;
}

struct FitArgs {
    std::string grid_path;
    std::string stations_path;
    std::string config_path;
    std::string targets_path;
    std::string out_dir = ".";
    long iterations = 20000;
    long burnin = 10000;
    long thin = 20;
    std::uint64_t seed = 1;
    int chains = 1;
};

int run_fit(const FitArgs& a) {
    json cfg_json = a.config_path.empty() ? json::object() : load_json(a.config_path);
    ChainConfig cfg;
    cfg.iterations = cfg_json.value("iterations", a.iterations);
    cfg.burnin = cfg_json.value("burnin", a.burnin);
    cfg.thin = cfg_json.value("thin", a.thin);
    cfg.jitter_rel = cfg_json.value("jitter", 1e-8);
    cfg.tmcmc.epsilon_scale = cfg_json.value("tmcmc_scale", 0.5);
    cfg.mh_step = cfg_json.value("mh_step", 0.5);
    cfg.adapt = cfg_json.value("adapt", true);
    cfg.validate();
    const std::uint64_t seed = cfg_json.value("seed", a.seed);
    const PriorSpec prior =
        cfg_json.contains("priors") ? priors_from_json(cfg_json.at("priors")) : PriorSpec{};

    LoadedData data = load_data(a.grid_path, a.stations_path);
    std::vector<PredictionTarget> targets;
    if (!a.targets_path.empty()) targets = targets_from_csv(a.targets_path);
    const AugmentedLayout layout = augment_target_latents(targets, data.sites, data.y.tmax());
    const FitProblem prob = make_augmented_problem(data.y, layout);

    const DecompositionComponents* comp =
        data.decomposition ? &data.decomposition->components : nullptr;

    std::vector<Trace> traces(size_t(a.chains));
    std::vector<std::thread> workers;
    for (int c = 0; c < a.chains; ++c)
        workers.emplace_back([&, c] {
            Rng rng = a.chains == 1 ? Rng(seed) : Rng(seed).split(std::uint64_t(c));
            traces[size_t(c)] = run_chain(prob, prior, cfg, rng);
        });
    for (auto& w : workers) w.join();

    for (int c = 0; c < a.chains; ++c) {
        const std::string suffix = c == 0 ? "" : "." + std::to_string(c + 1);
        const std::string csv = a.out_dir + "/trace" + suffix + ".csv";
        const std::string meta = a.out_dir + "/trace" + suffix + ".meta.json";
        write_trace_files(traces[size_t(c)], csv, meta, comp);
        std::cout << "chain " << c + 1 << ": " << traces[size_t(c)].size() << " samples -> " << csv
                  << "\n";
    }
    return 0;
}

struct PredictArgs {
    std::string trace_csv = "trace.csv";
    std::string meta_path;
    std::string grid_path;
    std::string stations_path;
    std::string targets_path;
    std::string out = "predictions.csv";
    double level = 0.95;
    std::uint64_t seed = 1;
    bool add_back_components = false;
    bool exact_refit = false;
    long refit_iterations = 2000;
    long refit_burnin = 1000;
    long refit_thin = 2;
};

std::string meta_for(const PredictArgs& a) {
    if (!a.meta_path.empty()) return a.meta_path;
    std::string base = a.trace_csv;
    const auto pos = base.rfind(".csv");
    if (pos != std::string::npos) base = base.substr(0, pos);
    return base + ".meta.json";
}

int run_predict(const PredictArgs& a) {
    const TraceBundle bundle = read_trace_files(a.trace_csv, meta_for(a));
    LoadedData data = load_data(a.grid_path, a.stations_path);
    if (data.sites.n() != bundle.trace.n_monitored)
        throw ConfigError("data does not match the trace's monitored sites");
    const auto targets = targets_from_csv(a.targets_path);
    if (targets.empty()) throw ConfigError("no prediction targets given");

    Rng rng(a.seed);
    const PredictionResult result = posterior_predictive(targets, bundle.trace, data.y, rng);

    std::ofstream out(a.out);
    if (!out) throw DataError("cannot write " + a.out);
    write_predictions_header(out, false);
    for (const auto& d : result.draws) {
        PredictiveDraws draws = d;
        if (a.add_back_components) {
            if (!bundle.components) throw ConfigError("trace carries no decomposition components");
            const int station = station_index_for_site(d.target.site, data.sites);
            if (station >= 0) draws = add_back(draws, *bundle.components, station, d.target.time);
        }
        const Interval iv = interval(draws, a.level);
        out << fmt(d.target.site.x()) << ',' << fmt(d.target.site.y()) << ',' << d.target.time
            << ',' << fmt(iv.lower) << ',' << fmt(iv.median) << ',' << fmt(iv.upper) << '\n';
    }
    if (result.clamp_count > 0)
        std::cerr << "warning: " << result.clamp_count << " predictive variances clamped at zero\n";
    std::cout << "wrote " << a.out << " (" << result.draws.size() << " targets)\n";
    return 0;
}

int run_loo(const PredictArgs& a) {
    const TraceBundle bundle = read_trace_files(a.trace_csv, meta_for(a));
    LoadedData data = load_data(a.grid_path, a.stations_path);
    if (data.sites.n() != bundle.trace.n_monitored)
        throw ConfigError("data does not match the trace's monitored sites");

    Rng rng(a.seed);
    LooReport report;
    if (a.exact_refit) {
        ChainConfig cfg;
        cfg.iterations = a.refit_iterations;
        cfg.burnin = a.refit_burnin;
        cfg.thin = a.refit_thin;
        report = loo_coverage_report_refit(data.y, data.sites, PriorSpec{}, cfg, a.level, rng);
    } else {
        report = loo_coverage_report(data.y, bundle.trace, a.level, rng);
    }

    std::ofstream out(a.out);
    if (!out) throw DataError("cannot write " + a.out);
    write_predictions_header(out, true);
    for (const auto& row : report.rows) {
        Interval iv = row.interval;
        double observed = row.observed;
        if (a.add_back_components && bundle.components) {
            const double shift = bundle.components->shift(row.site_index, row.time);
            iv.lower += shift;
            iv.median += shift;
            iv.upper += shift;
            observed += shift;
        }
        const auto& c = data.sites.coords[size_t(row.site_index)];
        out << fmt(c.x()) << ',' << fmt(c.y()) << ',' << row.time << ',' << fmt(iv.lower) << ','
            << fmt(iv.median) << ',' << fmt(iv.upper) << ',' << fmt(observed) << ','
            << (row.hit ? 1 : 0) << '\n';
    }
    std::cout << "leave-one-out coverage: " << report.hits << "/" << report.total
              << ", mean interval length " << report.mean_interval_length << "\n";
    return 0;
}

int run_impute(const PredictArgs& a) {
    const TraceBundle bundle = read_trace_files(a.trace_csv, meta_for(a));
    LoadedData data = load_data(a.grid_path, a.stations_path);
    if (data.sites.n() != bundle.trace.n_monitored)
        throw ConfigError("data does not match the trace's monitored sites");

    Rng rng(a.seed);
    const PredictionResult result = impute_missing(data.y, bundle.trace, rng);
    std::ofstream out(a.out);
    if (!out) throw DataError("cannot write " + a.out);
    write_predictions_header(out, false);
    for (const auto& d : result.draws) {
        PredictiveDraws draws = d;
        if (a.add_back_components && bundle.components)
            draws = add_back(draws, *bundle.components, d.target.site_index, d.target.time);
        const Interval iv = interval(draws, a.level);
        const auto& c = data.sites.coords[size_t(d.target.site_index)];
        out << fmt(c.x()) << ',' << fmt(c.y()) << ',' << d.target.time << ',' << fmt(iv.lower)
            << ',' << fmt(iv.median) << ',' << fmt(iv.upper) << '\n';
    }
    std::cout << "wrote " << a.out << " (" << result.draws.size() << " missing cells)\n";
    return 0;
}

struct CovcheckArgs {
    long sims = 100000;
    std::uint64_t seed = 1;
    std::string out = "covcheck.csv";
};

int run_covcheck(const CovcheckArgs& a) {
    // small-process-variance regime where the geometric approximation holds
    SiteSet sites;
    sites.coords = {{0.0, 0.0}, {0.6, 0.0}};
    ModelParams p;
    p.obs_intercept = -0.3;
    p.obs_slope = 1.0;
    p.evo_intercept = 0.4;
    p.evo_slope = 0.5;
    p.obs_fn = {1e-4, 1.0};
    p.evo_fn = {1e-4, 1.0};
    p.obs_noise = {1.0, 1.0};
    p.evo_noise = {0.06, 1.0};
    p.init = {0.03, 1.0};
    p.init_mean = Eigen::VectorXd::Zero(2);

    const std::vector<std::pair<int, int>> lags = {{1, 1}, {3, 1}, {5, 2}};
    const int T = 5;

    std::ofstream out(a.out);
    if (!out) throw DataError("cannot write " + a.out);
    out << "t,tstar,formula,mc_estimate,mc_se\n";

    Rng rng(a.seed);
    std::vector<Eigen::MatrixXd> grids;
    grids.reserve(size_t(a.sims));
    for (long k = 0; k < a.sims; ++k)
        grids.push_back(simulate_dataset(p, sites, T, rng).observed.values);

    for (const auto& [t, tstar] : lags) {
        double sa = 0, sb = 0, sab = 0;
        for (long k = 0; k < a.sims; ++k) {
            const double ya = grids[size_t(k)](0, t - 1);
            const double yb = grids[size_t(k)](1, tstar - 1);
            sa += ya;
            sb += yb;
            sab += ya * yb;
        }
        const double n = double(a.sims);
        const double ma = sa / n, mb = sb / n;
        const double cov = sab / n - ma * mb;
        // delta-method standard error of the sample covariance
        double m22 = 0;
        for (long k = 0; k < a.sims; ++k) {
            const double ya = grids[size_t(k)](0, t - 1) - ma;
            const double yb = grids[size_t(k)](1, tstar - 1) - mb;
            m22 += ya * ya * yb * yb;
        }
        m22 /= n;
        const double se = std::sqrt((m22 - cov * cov) / n);
        const double formula =
            approx_covariance_geometric(p, sites.coords[0], sites.coords[1], t, tstar);
        out << t << ',' << tstar << ',' << fmt(formula) << ',' << fmt(cov) << ',' << fmt(se)
            << '\n';
        std::cout << "(" << t << "," << tstar << "): formula " << formula << ", estimate " << cov
                  << " +- " << se << "\n";
    }
    return 0;
}

struct DiagnoseArgs {
    std::vector<std::string> traces;
    double level = 0.95;
    std::string out;
};

int run_diagnose(const DiagnoseArgs& a) {
    std::vector<Trace> traces;
    for (const auto& path : a.traces) {
        PredictArgs tmp;
        tmp.trace_csv = path;
        traces.push_back(read_trace_files(path, meta_for(tmp)).trace);
    }
    const DiagnosticsReport report = diagnostics(traces, a.level);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!a.out.empty()) {
        file.open(a.out);
        if (!file) throw DataError("cannot write " + a.out);
        os = &file;
    }
    *os << "parameter,mean,median,lower,upper,psr\n";
    for (const auto& p : report.params) {
        *os << p.name << ',' << fmt(p.mean) << ',' << fmt(p.median) << ',' << fmt(p.lower) << ','
            << fmt(p.upper) << ',';
        if (p.psr_defined)
            *os << fmt(p.psr);
        else
            *os << "undefined";
        *os << '\n';
    }
    *os << '\n' << "move,acceptance_rate\n";
    for (const auto& [name, rate] : report.acceptance_rates) *os << name << ',' << fmt(rate) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonparametric Gaussian-process state-space modeling of spatio-temporal data"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "forward-simulate a dataset from the model");
    sim->add_option("--n", sim_args.n, "number of sites");
    sim->add_option("--T", sim_args.T, "number of time steps");
    sim->add_option("--seed", sim_args.seed, "random seed");
    sim->add_option("--square", sim_args.square, "side length of the site square");
    sim->add_option("--out", sim_args.out, "output grid CSV");
    sim->add_option("--latent-out", sim_args.latent_out, "optional latent-field CSV");
    sim->add_option("--params", sim_args.params_path, "JSON file with model parameters");
    sim->add_option("--mu0", sim_args.mu0_mode, "initial mean: draw (standard normal) or zero");

    SimulateArgs nl_args;
    nl_args.n = 20;
    auto* nl = app.add_subcommand("simulate-nonlinear",
                                  "simulate from the fixed nonlinear benchmark generator");
    nl->add_option("--n", nl_args.n, "number of sites");
    nl->add_option("--T", nl_args.T, "number of time steps");
    nl->add_option("--seed", nl_args.seed, "random seed");
    nl->add_option("--square", nl_args.square, "side length of the site square");
    nl->add_option("--out", nl_args.out, "output grid CSV");
    nl->add_option("--latent-out", nl_args.latent_out, "optional latent-field CSV");

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "run the posterior sampler");
    fit->add_option("--grid", fit_args.grid_path, "grid CSV (site,x,y,t,value)");
    fit->add_option("--stations", fit_args.stations_path,
                    "station CSV (station,lon_deg,lat_deg,year,month,value)");
    fit->add_option("--config", fit_args.config_path, "JSON run configuration");
    fit->add_option("--targets", fit_args.targets_path, "CSV of prediction targets (x,y,t)");
    fit->add_option("--out-dir", fit_args.out_dir, "output directory");
    fit->add_option("--iterations", fit_args.iterations, "MCMC iterations");
    fit->add_option("--burnin", fit_args.burnin, "burn-in iterations");
    fit->add_option("--thin", fit_args.thin, "thinning stride");
    fit->add_option("--seed", fit_args.seed, "random seed");
    fit->add_option("--chains", fit_args.chains, "number of parallel chains")
        ->check(CLI::Range(1, 64));

    PredictArgs pred_args;
    auto* pred = app.add_subcommand("predict", "posterior predictive at new coordinates");
    auto add_common = [&](CLI::App* cmd, PredictArgs& pa) {
        cmd->add_option("--trace", pa.trace_csv, "trace CSV from fit");
        cmd->add_option("--meta", pa.meta_path, "trace meta JSON (default: trace base + .meta.json)");
        cmd->add_option("--grid", pa.grid_path, "grid CSV used for the fit");
        cmd->add_option("--stations", pa.stations_path, "station CSV used for the fit");
        cmd->add_option("--level", pa.level, "credible level");
        cmd->add_option("--seed", pa.seed, "random seed");
        cmd->add_option("--out", pa.out, "output CSV");
        cmd->add_flag("--add-back", pa.add_back_components,
                      "shift predictions back by trend and seasonal components");
    };
    add_common(pred, pred_args);
    pred->add_option("--targets", pred_args.targets_path, "CSV of targets (x,y,t)")->required();

    PredictArgs loo_args;
    auto* loo = app.add_subcommand("loo", "leave-one-out coverage report");
    add_common(loo, loo_args);
    loo->add_flag("--exact-refit", loo_args.exact_refit,
                  "refit the chain per held-out cell (small grids only)");
    loo->add_option("--refit-iterations", loo_args.refit_iterations, "iterations per refit");
    loo->add_option("--refit-burnin", loo_args.refit_burnin, "burn-in per refit");
    loo->add_option("--refit-thin", loo_args.refit_thin, "thinning per refit");

    PredictArgs imp_args;
    auto* imp = app.add_subcommand("impute", "impute missing cells");
    add_common(imp, imp_args);

    CovcheckArgs cov_args;
    auto* cov = app.add_subcommand("covcheck",
                                   "Monte-Carlo check of the geometric covariance approximation");
    cov->add_option("--sims", cov_args.sims, "number of forward simulations");
    cov->add_option("--seed", cov_args.seed, "random seed");
    cov->add_option("--out", cov_args.out, "output CSV");

    DiagnoseArgs diag_args;
    auto* diag = app.add_subcommand("diagnose", "summaries and convergence diagnostics");
    diag->add_option("--trace", diag_args.traces, "trace CSV files (one per chain)")->required();
    diag->add_option("--level", diag_args.level, "credible level");
    diag->add_option("--out", diag_args.out, "optional output CSV (default stdout)");

    try {
        app.parse(argc, argv);
        if (sim->parsed()) return run_simulate(sim_args, false);
        if (nl->parsed()) return run_simulate(nl_args, true);
        if (fit->parsed()) return run_fit(fit_args);
        if (pred->parsed()) return run_predict(pred_args);
        if (loo->parsed()) return run_loo(loo_args);
        if (imp->parsed()) return run_impute(imp_args);
        if (cov->parsed()) return run_covcheck(cov_args);
        if (diag->parsed()) return run_diagnose(diag_args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidInputError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const IllConditionedError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 4;
    } catch (const DegenerateInputError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
