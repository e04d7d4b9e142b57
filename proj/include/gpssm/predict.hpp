#ifndef GPSSM_PREDICT_HPP
#define GPSSM_PREDICT_HPP

#include <Eigen/Dense>
#include <vector>

#include "gpssm/mcmc.hpp"
#include "gpssm/rng.hpp"
#include "gpssm/types.hpp"

namespace gpssm {

struct PredictionTarget {
    enum class Kind { new_site, leave_one_out, missing_cell };
    Kind kind = Kind::new_site;
    Eigen::Vector2d site = Eigen::Vector2d::Zero();
    int site_index = -1;  // monitored site index (leave_one_out / missing_cell)
    int time = 1;         // 1..latent horizon; one step beyond the data allowed

    static PredictionTarget at_new_site(const Eigen::Vector2d& site, int time);
    static PredictionTarget loo_cell(int site_index, int time);
    static PredictionTarget missing_cell(int site_index, int time);
};

// Latent layout for a set of prediction targets: new sites are appended
// after the monitored ones (duplicates of monitored sites collapse onto
// the monitored column and are flagged), and the latent horizon extends
// to the largest requested time.
struct AugmentedLayout {
    SiteSet all_sites;
    int n_monitored = 0;
    int latent_tmax = 0;
    std::vector<int> target_rows;    // latent row per target
    std::vector<bool> collapsed;     // target site coincided with a monitored site
};

AugmentedLayout augment_target_latents(const std::vector<PredictionTarget>& targets,
                                       const SiteSet& monitored, int obs_tmax);

// FitProblem over the augmented layout.
FitProblem make_augmented_problem(const ObservationGrid& y, const AugmentedLayout& layout);

struct PredictiveDraws {
    std::vector<double> samples;
    PredictionTarget target;
};

struct Interval {
    double lower = 0.0;
    double median = 0.0;
    double upper = 0.0;
    double length() const { return upper - lower; }
};

// Empirical central interval by linear interpolation of order statistics.
Interval interval(const PredictiveDraws& draws, double level);

// Conditional moments and draws for one posterior sample. The engine
// factorizes the observation covariance over the conditioning cells once
// and serves every target of that sample.
class PredictiveEngine {
  public:
    PredictiveEngine(const ModelParams& params, const Eigen::MatrixXd& latents,
                     const SiteSet& all_sites, int n_monitored, const ObservationGrid& y,
                     double jitter_rel = 1e-8);

    struct Moments {
        double mean = 0.0;
        double var = 0.0;
        bool clamped = false;  // negative variance clamped to zero
    };

    // conditions on every observed cell
    Moments at(int latent_row, int time, const Eigen::Vector2d& site) const;
    // conditions on every observed cell except the target one
    Moments leave_one_out(int site_index, int time) const;

    int cell_count() const { return static_cast<int>(cells_.size()); }

  private:
    void ensure_precision() const;

    ModelParams params_;
    Eigen::MatrixXd latents_;
    SiteSet sites_;
    int n_monitored_;
    double jitter_;
    std::vector<std::pair<int, int>> cells_;
    Eigen::VectorXd residual_;
    CholFactor chol_;
    Eigen::VectorXd weights_;  // chol-solved residual
    mutable Eigen::MatrixXd precision_;       // filled on first leave-one-out call
    mutable Eigen::VectorXd precision_resid_;
    mutable bool precision_ready_ = false;
};

// One draw from the posterior predictive per retained posterior sample.
struct PredictionResult {
    std::vector<PredictiveDraws> draws;  // one entry per target
    long clamp_count = 0;                // negative predictive variances clamped
};

PredictionResult posterior_predictive(const std::vector<PredictionTarget>& targets,
                                      const Trace& trace, const ObservationGrid& y, Rng& rng,
                                      double jitter_rel = 1e-8);

// Single conditional draw given one latent field and parameter set.
double predictive_draw(const LatentField& x_aug, const ModelParams& p, const SiteSet& all_sites,
                       int n_monitored, const ObservationGrid& y, const PredictionTarget& target,
                       Rng& rng, double jitter_rel = 1e-8, long* clamp_counter = nullptr);

// Leave-one-out prediction over every observed cell.
struct LooRow {
    int site_index = 0;
    int time = 0;
    Interval interval;
    double observed = 0.0;
    bool hit = false;
};

struct LooReport {
    long hits = 0;
    long total = 0;
    double mean_interval_length = 0.0;
    std::vector<LooRow> rows;
    long clamp_count = 0;
};

LooReport loo_coverage_report(const ObservationGrid& y, const Trace& trace, double level, Rng& rng,
                              double jitter_rel = 1e-8);

// Exact-refit leave-one-out: refits the chain with the cell masked out and
// imputes it. Only sensible for small grids.
LooReport loo_coverage_report_refit(const ObservationGrid& y, const SiteSet& monitored,
                                    const PriorSpec& prior, const ChainConfig& cfg, double level,
                                    Rng& rng);

// Posterior of the process correlation between two monitored space-time
// coordinates, estimated per retained sample by forward-simulating
// replicate datasets at that sample's parameters.
struct SpaceTimeCoord {
    int site_index = 0;
    int time = 1;
};

std::vector<double> correlation_posterior(const SpaceTimeCoord& a, const SpaceTimeCoord& b,
                                          const Trace& trace, int replicates, Rng& rng);

// Imputation of every missing cell through the same predictive machinery.
PredictionResult impute_missing(const ObservationGrid& y, const Trace& trace, Rng& rng,
                                double jitter_rel = 1e-8);

}  // namespace gpssm

#endif
