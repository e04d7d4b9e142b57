#include "gpssm/types.hpp"

#include <cmath>

namespace gpssm {

bool SiteSet::has_duplicates(double tol) const {
    for (std::size_t i = 0; i < coords.size(); ++i)
        for (std::size_t j = i + 1; j < coords.size(); ++j)
            if ((coords[i] - coords[j]).squaredNorm() <= tol * tol) return true;
    return false;
}

void SiteSet::validate() const {
    if (coords.empty()) throw InvalidInputError("SiteSet: at least one site required");
    for (const auto& c : coords)
        if (!c.allFinite()) throw InvalidInputError("SiteSet: non-finite coordinate");
}

void LatentField::validate() const {
    if (values.rows() < 1 || values.cols() < 2)
        throw InvalidInputError("LatentField: need n >= 1 sites and T >= 1 time steps");
    if (!values.allFinite()) throw InvalidInputError("LatentField: non-finite value");
}

int ObservationGrid::observed_count() const {
    int c = 0;
    for (Eigen::Index i = 0; i < mask.rows(); ++i)
        for (Eigen::Index t = 0; t < mask.cols(); ++t)
            if (mask(i, t)) ++c;
    return c;
}

void ObservationGrid::validate() const {
    if (values.rows() < 1 || values.cols() < 1)
        throw InvalidInputError("ObservationGrid: empty grid");
    if (values.rows() != mask.rows() || values.cols() != mask.cols())
        throw InvalidInputError("ObservationGrid: mask shape mismatch");
    for (Eigen::Index i = 0; i < mask.rows(); ++i)
        for (Eigen::Index t = 0; t < mask.cols(); ++t)
            if (mask(i, t) && !std::isfinite(values(i, t)))
                throw InvalidInputError("ObservationGrid: non-finite observed value");
}

ObservationGrid ObservationGrid::fully_observed(const Eigen::MatrixXd& values) {
    ObservationGrid g;
    g.values = values;
    g.mask.setConstant(values.rows(), values.cols(), true);
    g.validate();
    return g;
}

void ModelParams::validate(int n_sites) const {
    obs_fn.validate();
    evo_fn.validate();
    obs_noise.validate();
    evo_noise.validate();
    init.validate();
    for (double b : {obs_intercept, obs_slope, evo_intercept, evo_slope})
        if (!std::isfinite(b)) throw InvalidInputError("ModelParams: non-finite coefficient");
    if (init_mean.size() != n_sites)
        throw InvalidInputError("ModelParams: init_mean length must equal the number of sites");
    if (!init_mean.allFinite()) throw InvalidInputError("ModelParams: non-finite init_mean");
}

}  // namespace gpssm
