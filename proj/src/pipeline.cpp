#include "gpssm/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace gpssm {

Eigen::Vector2d lambert_project(double lon, double lat) {
    if (!std::isfinite(lon) || !std::isfinite(lat))
        throw InvalidInputError("lambert_project: non-finite coordinate");
    if (std::abs(lat) > M_PI / 2.0 + 1e-12)
        throw InvalidInputError("lambert_project: latitude outside [-pi/2, pi/2]");
    const double r = 2.0 * std::sin(M_PI / 4.0 - lat / 2.0);
    return {r * std::sin(lon), -r * std::cos(lon)};
}

int StationRecord::observed_count() const {
    int c = 0;
    for (double v : series)
        if (std::isfinite(v)) ++c;
    return c;
}

void StationRecord::validate() const {
    if (std::abs(lat) > M_PI / 2.0 + 1e-12)
        throw InvalidInputError("station " + id + ": latitude outside [-pi/2, pi/2]");
    if (series.size() < 2)
        throw InvalidInputError("station " + id + ": series must hold at least two months");
    if (start_month < 1 || start_month > 12)
        throw InvalidInputError("station " + id + ": start month outside 1..12");
}

int DecompositionComponents::month_of(int t) const {
    return (start_month - 1 + (t - 1)) % 12 + 1;
}

double DecompositionComponents::shift(int station, int t) const {
    if (station < 0 || station >= intercept.size())
        throw ConfigError("decomposition: unknown station index");
    return intercept(station) + slope(station) * t + seasonal(station, month_of(t) - 1);
}

DecomposedData detrend_deseasonalize(const std::vector<StationRecord>& records, int period) {
    if (records.empty()) throw DegenerateInputError("detrend_deseasonalize: no stations");
    if (period != 12) throw InvalidInputError("detrend_deseasonalize: only period 12 supported");

    DecomposedData out;
    // common month range across stations
    int start_index = std::numeric_limits<int>::max();  // months since year 0
    int end_index = std::numeric_limits<int>::min();
    for (const auto& r : records) {
        r.validate();
        const int s = r.start_year * 12 + (r.start_month - 1);
        start_index = std::min(start_index, s);
        end_index = std::max(end_index, s + static_cast<int>(r.series.size()) - 1);
    }
    const int T = end_index - start_index + 1;
    const int n = static_cast<int>(records.size());

    Eigen::MatrixXd raw(n, T);
    raw.setConstant(std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < n; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        const int offset = r.start_year * 12 + (r.start_month - 1) - start_index;
        for (std::size_t k = 0; k < r.series.size(); ++k)
            raw(i, offset + static_cast<int>(k)) = r.series[k];
    }

    auto& comp = out.components;
    comp.start_year = start_index / 12;
    comp.start_month = start_index % 12 + 1;
    comp.intercept.setZero(n);
    comp.slope.setZero(n);
    comp.seasonal.setZero(n, 12);
    comp.station_ids.reserve(records.size());
    for (const auto& r : records) comp.station_ids.push_back(r.id);

    Eigen::MatrixXd residual(n, T);
    residual.setConstant(std::numeric_limits<double>::quiet_NaN());
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(n, T);
    mask.setConstant(false);

    for (int i = 0; i < n; ++i) {
        std::vector<int> times;
        for (int t = 1; t <= T; ++t)
            if (std::isfinite(raw(i, t - 1))) times.push_back(t);
        if (times.empty()) {
            out.warnings.push_back("station " + comp.station_ids[static_cast<std::size_t>(i)] +
                                   " has no observations and contributes nothing");
            continue;
        }

        // ordinary least squares on the time index
        double st = 0.0, sv = 0.0, stt = 0.0, stv = 0.0;
        for (int t : times) {
            const double v = raw(i, t - 1);
            st += t;
            sv += v;
            stt += double(t) * t;
            stv += t * v;
        }
        const double m = static_cast<double>(times.size());
        const double denom = m * stt - st * st;
        double slope = 0.0;
        double intercept = sv / m;
        if (times.size() >= 2 && std::abs(denom) > 1e-12) {
            slope = (m * stv - st * sv) / denom;
            intercept = (sv - slope * st) / m;
        }
        comp.intercept(i) = intercept;
        comp.slope(i) = slope;

        // monthly means of the detrended series, needs two full periods
        if (static_cast<int>(times.size()) >= 2 * period) {
            Eigen::VectorXd month_sum = Eigen::VectorXd::Zero(12);
            Eigen::VectorXd month_count = Eigen::VectorXd::Zero(12);
            for (int t : times) {
                const int month = comp.month_of(t) - 1;
                month_sum(month) += raw(i, t - 1) - (intercept + slope * t);
                month_count(month) += 1.0;
            }
            Eigen::VectorXd effect = Eigen::VectorXd::Zero(12);
            for (int mth = 0; mth < 12; ++mth)
                if (month_count(mth) > 0.0) effect(mth) = month_sum(mth) / month_count(mth);
            effect.array() -= effect.mean();  // re-center to sum to zero
            comp.seasonal.row(i) = effect.transpose();
        } else {
            out.warnings.push_back("station " + comp.station_ids[static_cast<std::size_t>(i)] +
                                   ": fewer than two full periods, seasonal set to zero");
        }

        for (int t : times) {
            residual(i, t - 1) = raw(i, t - 1) - comp.shift(i, t);
            mask(i, t - 1) = true;
        }
    }

    out.residual.values = residual;
    out.residual.mask = mask;
    out.residual.validate();

    out.sites.coords.reserve(records.size());
    for (const auto& r : records) out.sites.coords.push_back(lambert_project(r.lon, r.lat));
    return out;
}

PredictiveDraws add_back(const PredictiveDraws& draws, const DecompositionComponents& comp,
                         int station, int time) {
    const double shift = comp.shift(station, time);
    PredictiveDraws out = draws;
    for (double& v : out.samples) v += shift;
    return out;
}

// ---- CSV ingestion -------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

double parse_double(const std::string& s, const std::string& what, int line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + s + "'");
    }
}

int parse_int(const std::string& s, const std::string& what, int line_no) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + s + "'");
    }
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

std::vector<StationRecord> ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    if (strip_cr(line) != "station,lon_deg,lat_deg,year,month,value")
        throw DataError(path + ": expected header station,lon_deg,lat_deg,year,month,value");

    struct Row {
        int month_index;
        double value;
    };
    struct Partial {
        double lon, lat;
        int first_line;
        std::map<int, double> by_month;  // month index -> value (NaN = missing)
    };
    std::map<std::string, Partial> stations;
    std::vector<std::string> order;

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 6)
            throw DataError("line " + std::to_string(line_no) + ": expected 6 fields, found " +
                            std::to_string(fields.size()));
        const std::string& id = fields[0];
        if (id.empty()) throw DataError("line " + std::to_string(line_no) + ": empty station id");
        const double lon = parse_double(fields[1], "longitude", line_no) * M_PI / 180.0;
        const double lat = parse_double(fields[2], "latitude", line_no) * M_PI / 180.0;
        const int year = parse_int(fields[3], "year", line_no);
        const int month = parse_int(fields[4], "month", line_no);
        if (month < 1 || month > 12)
            throw DataError("line " + std::to_string(line_no) + ": month outside 1..12");
        double value = std::numeric_limits<double>::quiet_NaN();
        if (!fields[5].empty()) value = parse_double(fields[5], "value", line_no);

        auto it = stations.find(id);
        if (it == stations.end()) {
            stations.emplace(id, Partial{lon, lat, line_no, {}});
            order.push_back(id);
            it = stations.find(id);
        } else {
            if (std::abs(it->second.lon - lon) > 1e-12 || std::abs(it->second.lat - lat) > 1e-12)
                throw DataError("line " + std::to_string(line_no) + ": station " + id +
                                " reappears with different coordinates");
        }
        const int month_index = year * 12 + (month - 1);
        if (it->second.by_month.count(month_index))
            throw DataError("line " + std::to_string(line_no) + ": duplicate month for station " + id);
        it->second.by_month[month_index] = value;
    }

    std::vector<StationRecord> records;
    records.reserve(order.size());
    for (const auto& id : order) {
        const auto& p = stations.at(id);
        StationRecord rec;
        rec.id = id;
        rec.lon = p.lon;
        rec.lat = p.lat;
        const int first = p.by_month.begin()->first;
        const int last = p.by_month.rbegin()->first;
        rec.start_year = first / 12;
        rec.start_month = first % 12 + 1;
        rec.series.assign(static_cast<std::size_t>(last - first + 1),
                          std::numeric_limits<double>::quiet_NaN());
        for (const auto& [mi, v] : p.by_month) rec.series[static_cast<std::size_t>(mi - first)] = v;
        records.push_back(std::move(rec));
    }
    return records;
}

// ---- grid files -----------------------------------------------------------

namespace {

void write_value(std::ofstream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

}  // namespace

void write_grid_csv(const std::string& path, const SiteSet& sites, const ObservationGrid& y) {
    if (sites.n() != y.n()) throw InvalidInputError("write_grid_csv: site count mismatch");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "site,x,y,t,value\n";
    for (int i = 0; i < sites.n(); ++i) {
        for (int t = 1; t <= y.tmax(); ++t) {
            out << i << ',';
            write_value(out, sites.coords[static_cast<std::size_t>(i)].x());
            out << ',';
            write_value(out, sites.coords[static_cast<std::size_t>(i)].y());
            out << ',' << t << ',';
            if (y.mask(i, t - 1)) write_value(out, y.values(i, t - 1));
            out << '\n';
        }
    }
}

void write_latent_csv(const std::string& path, const SiteSet& sites, const LatentField& x) {
    if (sites.n() != x.n()) throw InvalidInputError("write_latent_csv: site count mismatch");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "site,x,y,t,value\n";
    for (int i = 0; i < sites.n(); ++i) {
        for (int t = 0; t <= x.tmax(); ++t) {
            out << i << ',';
            write_value(out, sites.coords[static_cast<std::size_t>(i)].x());
            out << ',';
            write_value(out, sites.coords[static_cast<std::size_t>(i)].y());
            out << ',' << t << ',';
            write_value(out, x.values(i, t));
            out << '\n';
        }
    }
}

GridData read_grid_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    if (strip_cr(line) != "site,x,y,t,value")
        throw DataError(path + ": expected header site,x,y,t,value");

    struct Cell {
        int site, t;
        double x, y, value;
        bool observed;
    };
    std::vector<Cell> cells;
    int line_no = 1;
    int max_site = -1, max_t = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw DataError("line " + std::to_string(line_no) + ": expected 5 fields");
        Cell c;
        c.site = parse_int(fields[0], "site", line_no);
        c.x = parse_double(fields[1], "x", line_no);
        c.y = parse_double(fields[2], "y", line_no);
        c.t = parse_int(fields[3], "t", line_no);
        c.observed = !fields[4].empty();
        c.value = c.observed ? parse_double(fields[4], "value", line_no)
                             : std::numeric_limits<double>::quiet_NaN();
        if (c.site < 0 || c.t < 1)
            throw DataError("line " + std::to_string(line_no) + ": invalid site or time index");
        max_site = std::max(max_site, c.site);
        max_t = std::max(max_t, c.t);
        cells.push_back(c);
    }
    if (cells.empty()) throw DataError(path + ": no data rows");

    GridData g;
    g.sites.coords.assign(static_cast<std::size_t>(max_site) + 1,
                          Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN()));
    g.y.values.setConstant(max_site + 1, max_t, std::numeric_limits<double>::quiet_NaN());
    g.y.mask.setConstant(max_site + 1, max_t, false);
    for (const auto& c : cells) {
        auto& coord = g.sites.coords[static_cast<std::size_t>(c.site)];
        if (coord.allFinite() && ((coord - Eigen::Vector2d(c.x, c.y)).norm() > 1e-12))
            throw DataError("site " + std::to_string(c.site) + " has inconsistent coordinates");
        coord = {c.x, c.y};
        g.y.values(c.site, c.t - 1) = c.value;
        g.y.mask(c.site, c.t - 1) = c.observed;
    }
    for (const auto& coord : g.sites.coords)
        if (!coord.allFinite()) throw DataError(path + ": a site index is never defined");
    g.y.validate();
    return g;
}

}  // namespace gpssm
