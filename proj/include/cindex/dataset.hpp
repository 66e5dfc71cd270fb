#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cindex/errors.hpp"

namespace cindex {

// One right-censored observation: covariates x, follow-up time
// t = min(Y, C) and event indicator delta = 1{Y <= C}.
struct ObservedTriple {
    Eigen::VectorXd x;
    double t = 0.0;
    int delta = 1;
};

using Dataset = std::vector<ObservedTriple>;

inline int dataset_dim(const Dataset& data) {
    if (data.empty()) throw DimensionMismatch("empty dataset");
    const int d = static_cast<int>(data.front().x.size());
    if (d < 1) throw DimensionMismatch("covariate dimension must be >= 1");
    for (const auto& obs : data) {
        if (obs.x.size() != d)
            throw DimensionMismatch("inconsistent covariate dimension");
        if (!std::isfinite(obs.t))
            throw SchemaError("non-finite follow-up time");
        if (obs.delta != 0 && obs.delta != 1)
            throw SchemaError("delta must be 0 or 1");
    }
    return d;
}

inline std::size_t count_censored(const Dataset& data) {
    return static_cast<std::size_t>(
        std::count_if(data.begin(), data.end(),
                      [](const ObservedTriple& o) { return o.delta == 0; }));
}

// Empirical q-quantile of the uncensored follow-up times, used as the
// default truncation point tau. Linear-interpolation quantile.
inline double uncensored_time_quantile(const Dataset& data, double q) {
    std::vector<double> times;
    times.reserve(data.size());
    for (const auto& obs : data)
        if (obs.delta == 1) times.push_back(obs.t);
    if (times.empty()) throw Error("no uncensored observations for quantile");
    std::sort(times.begin(), times.end());
    if (q <= 0.0) return times.front();
    if (q >= 1.0) return times.back();
    const double pos = q * static_cast<double>(times.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= times.size()) return times.back();
    return times[lo] * (1.0 - frac) + times[lo + 1] * frac;
}

}  // namespace cindex
