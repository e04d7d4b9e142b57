#ifndef GPSSM_STATS_HPP
#define GPSSM_STATS_HPP

#include <algorithm>
#include <vector>

#include "gpssm/errors.hpp"

namespace gpssm {

// Empirical quantile by linear interpolation of order statistics:
// with m values v_(0) <= ... <= v_(m-1), q(p) interpolates at h = (m-1)p.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw DegenerateInputError("quantile of empty sample");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, p);
}

inline double mean_of(const std::vector<double>& values) {
    if (values.empty()) throw DegenerateInputError("mean of empty sample");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

inline double variance_of(const std::vector<double>& values) {
    if (values.size() < 2) throw DegenerateInputError("variance needs at least two values");
    const double m = mean_of(values);
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return s / (static_cast<double>(values.size()) - 1.0);
}

}  // namespace gpssm

#endif
