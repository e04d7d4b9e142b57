#ifndef GPSSM_PIPELINE_HPP
#define GPSSM_PIPELINE_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gpssm/predict.hpp"
#include "gpssm/types.hpp"

namespace gpssm {

// Area-preserving projection of (longitude, latitude), both in radians,
// onto the plane used for all spatial distances.
Eigen::Vector2d lambert_project(double lon, double lat);

// One monitoring station: planar position comes from lambert_project,
// series values are ordered monthly measurements with NaN for gaps.
struct StationRecord {
    std::string id;
    double lon = 0.0;  // radians
    double lat = 0.0;  // radians
    int start_year = 0;
    int start_month = 1;  // 1..12, calendar month of series[0]
    std::vector<double> series;

    int observed_count() const;
    void validate() const;
};

// Per-station linear trend plus calendar-month effects (re-centered to
// sum to zero). Time index t = 1..T counts months from the common start.
struct DecompositionComponents {
    std::vector<std::string> station_ids;
    Eigen::VectorXd intercept;
    Eigen::VectorXd slope;
    Eigen::MatrixXd seasonal;  // n x 12
    int start_year = 0;
    int start_month = 1;

    int month_of(int t) const;  // calendar month 1..12 of time index t
    double shift(int station, int t) const;  // trend + seasonal at (station, t)
};

struct DecomposedData {
    SiteSet sites;  // projected station coordinates, station order
    ObservationGrid residual;
    DecompositionComponents components;
    std::vector<std::string> warnings;
};

// Aligns the stations onto the common month range, fits the per-station
// trend and seasonal effects on the observed cells, and returns the
// residual grid together with the components needed for add-back.
DecomposedData detrend_deseasonalize(const std::vector<StationRecord>& records, int period = 12);

// Shifts every draw by the target cell's trend + seasonal component.
PredictiveDraws add_back(const PredictiveDraws& draws, const DecompositionComponents& comp,
                         int station, int time);

// CSV with header station,lon_deg,lat_deg,year,month,value; empty value
// means missing. Degrees are converted to radians.
std::vector<StationRecord> ingest_csv(const std::string& path);

// ---- grid files (simulated data) ---------------------------------------

struct GridData {
    SiteSet sites;
    ObservationGrid y;
};

// CSV with header site,x,y,t,value; empty value means missing.
void write_grid_csv(const std::string& path, const SiteSet& sites, const ObservationGrid& y);
GridData read_grid_csv(const std::string& path);
// latent layers t = 0..T, same column layout
void write_latent_csv(const std::string& path, const SiteSet& sites, const LatentField& x);

}  // namespace gpssm

#endif
