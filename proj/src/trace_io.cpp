#include "gpssm/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace gpssm {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_trace_files(const Trace& trace, const std::string& csv_path,
                       const std::string& meta_path, const DecompositionComponents* components) {
    std::ofstream csv(csv_path);
    if (!csv) throw DataError("cannot write " + csv_path);

    const auto names = param_names(trace);
    const int n_all = trace.sites.n();
    for (std::size_t k = 0; k < names.size(); ++k) csv << (k ? "," : "") << names[k];
    for (int i = 0; i < n_all; ++i)
        for (int t = 0; t <= trace.latent_tmax; ++t) csv << ",x_" << i << '_' << t;
    csv << '\n';

    for (const auto& sample : trace.samples) {
        const Eigen::VectorXd v = param_vector(sample.params, trace.n_monitored);
        for (Eigen::Index k = 0; k < v.size(); ++k) csv << (k ? "," : "") << fmt(v(k));
        for (int i = 0; i < n_all; ++i)
            for (int t = 0; t <= trace.latent_tmax; ++t) csv << ',' << fmt(sample.latents(i, t));
        csv << '\n';
    }
    csv.close();

    json meta;
    meta["seed"] = trace.seed;
    meta["iterations"] = trace.iterations;
    meta["burnin"] = trace.burnin;
    meta["thin"] = trace.thin;
    meta["n_monitored"] = trace.n_monitored;
    meta["obs_tmax"] = trace.obs_tmax;
    meta["latent_tmax"] = trace.latent_tmax;
    meta["samples"] = trace.samples.size();
    json sites = json::array();
    for (const auto& c : trace.sites.coords) sites.push_back({c.x(), c.y()});
    meta["sites"] = sites;

    json lat = json::array();
    for (const auto& c : trace.acceptance.latent_blocks)
        lat.push_back({{"proposals", c.proposals}, {"accepts", c.accepts}});
    meta["acceptance"]["latent_blocks"] = lat;
    json ker = json::object();
    for (int k = 0; k < kNumKernelParams; ++k) {
        const auto& c = trace.acceptance.kernel[static_cast<std::size_t>(k)];
        ker[kernel_param_name(static_cast<KernelParamId>(k))] = {{"proposals", c.proposals},
                                                                 {"accepts", c.accepts}};
    }
    meta["acceptance"]["kernel"] = ker;
    meta["tmcmc_scales"] = trace.tmcmc_scales;
    meta["mh_steps"] = trace.mh_steps;

    if (components) {
        json comp;
        comp["station_ids"] = components->station_ids;
        comp["start_year"] = components->start_year;
        comp["start_month"] = components->start_month;
        comp["intercept"] = std::vector<double>(components->intercept.data(),
                                                components->intercept.data() + components->intercept.size());
        comp["slope"] = std::vector<double>(components->slope.data(),
                                            components->slope.data() + components->slope.size());
        json seas = json::array();
        for (Eigen::Index i = 0; i < components->seasonal.rows(); ++i) {
            json row = json::array();
            for (int m = 0; m < 12; ++m) row.push_back(components->seasonal(i, m));
            seas.push_back(row);
        }
        comp["seasonal"] = seas;
        meta["components"] = comp;
    }

    std::ofstream mf(meta_path);
    if (!mf) throw DataError("cannot write " + meta_path);
    mf << meta.dump(2) << '\n';
}

TraceBundle read_trace_files(const std::string& csv_path, const std::string& meta_path) {
    std::ifstream mf(meta_path);
    if (!mf) throw DataError("cannot open " + meta_path);
    json meta;
    try {
        mf >> meta;
    } catch (const json::exception& e) {
        throw DataError(meta_path + ": " + e.what());
    }

    TraceBundle bundle;
    Trace& trace = bundle.trace;
    try {
        trace.seed = meta.at("seed").get<std::uint64_t>();
        trace.iterations = meta.at("iterations").get<long>();
        trace.burnin = meta.at("burnin").get<long>();
        trace.thin = meta.at("thin").get<long>();
        trace.n_monitored = meta.at("n_monitored").get<int>();
        trace.obs_tmax = meta.at("obs_tmax").get<int>();
        trace.latent_tmax = meta.at("latent_tmax").get<int>();
        for (const auto& c : meta.at("sites"))
            trace.sites.coords.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
        for (const auto& c : meta.at("acceptance").at("latent_blocks"))
            trace.acceptance.latent_blocks.push_back(
                {c.at("proposals").get<long>(), c.at("accepts").get<long>()});
        for (int k = 0; k < kNumKernelParams; ++k) {
            const auto& c =
                meta.at("acceptance").at("kernel").at(kernel_param_name(static_cast<KernelParamId>(k)));
            trace.acceptance.kernel[static_cast<std::size_t>(k)] = {c.at("proposals").get<long>(),
                                                                    c.at("accepts").get<long>()};
        }
        trace.tmcmc_scales = meta.at("tmcmc_scales").get<std::vector<double>>();
        trace.mh_steps = meta.at("mh_steps").get<std::vector<double>>();

        if (meta.contains("components")) {
            DecompositionComponents comp;
            const auto& c = meta.at("components");
            comp.station_ids = c.at("station_ids").get<std::vector<std::string>>();
            comp.start_year = c.at("start_year").get<int>();
            comp.start_month = c.at("start_month").get<int>();
            const auto inter = c.at("intercept").get<std::vector<double>>();
            const auto slope = c.at("slope").get<std::vector<double>>();
            comp.intercept = Eigen::Map<const Eigen::VectorXd>(inter.data(),
                                                               static_cast<Eigen::Index>(inter.size()));
            comp.slope = Eigen::Map<const Eigen::VectorXd>(slope.data(),
                                                           static_cast<Eigen::Index>(slope.size()));
            comp.seasonal.resize(static_cast<Eigen::Index>(comp.station_ids.size()), 12);
            const auto& seas = c.at("seasonal");
            for (Eigen::Index i = 0; i < comp.seasonal.rows(); ++i)
                for (int m = 0; m < 12; ++m)
                    comp.seasonal(i, m) = seas.at(static_cast<std::size_t>(i)).at(m).get<double>();
            bundle.components = std::move(comp);
        }
    } catch (const json::exception& e) {
        throw DataError(meta_path + ": " + e.what());
    }

    std::ifstream csv(csv_path);
    if (!csv) throw DataError("cannot open " + csv_path);
    std::string header;
    if (!std::getline(csv, header)) throw DataError(csv_path + ": empty file");

    const int n_all = trace.sites.n();
    const Eigen::Index n_params = 4 + kNumKernelParams + trace.n_monitored;
    const Eigen::Index n_latents =
        static_cast<Eigen::Index>(n_all) * (trace.latent_tmax + 1);

    std::string line;
    int line_no = 1;
    while (std::getline(csv, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        Eigen::VectorXd row(n_params + n_latents);
        Eigen::Index k = 0;
        while (std::getline(ss, field, ',')) {
            if (k >= row.size())
                throw DataError(csv_path + " line " + std::to_string(line_no) + ": too many fields");
            row(k++) = std::strtod(field.c_str(), nullptr);
        }
        if (k != row.size())
            throw DataError(csv_path + " line " + std::to_string(line_no) + ": too few fields");

        TraceSample sample;
        sample.params.obs_intercept = row(0);
        sample.params.obs_slope = row(1);
        sample.params.evo_intercept = row(2);
        sample.params.evo_slope = row(3);
        for (int p = 0; p < kNumKernelParams; ++p)
            set_kernel_param(sample.params, static_cast<KernelParamId>(p), row(4 + p));
        sample.params.init_mean = Eigen::VectorXd::Zero(n_all);
        sample.params.init_mean.head(trace.n_monitored) =
            row.segment(4 + kNumKernelParams, trace.n_monitored);
        sample.latents.resize(n_all, trace.latent_tmax + 1);
        Eigen::Index pos = n_params;
        for (int i = 0; i < n_all; ++i)
            for (int t = 0; t <= trace.latent_tmax; ++t) sample.latents(i, t) = row(pos++);
        trace.samples.push_back(std::move(sample));
    }
    return bundle;
}

}  // namespace gpssm
