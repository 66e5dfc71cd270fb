#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "cindex/dataset.hpp"
#include "cindex/errors.hpp"
#include "cindex/kernels.hpp"

namespace cindex {

// Step-function estimate of a conditional censoring distribution
// G(t | index = z). jump_values[k] is the (right-continuous) value at and
// after jump_times[k]; the curve is 0 before the first jump.
struct BeranCurve {
    std::vector<double> jump_times;
    std::vector<double> jump_values;
    double z = std::numeric_limits<double>::quiet_NaN();
    double bandwidth = std::numeric_limits<double>::infinity();
};

// Right-continuous evaluation G(t).
inline double beran_eval(const BeranCurve& curve, double t) {
    auto it = std::upper_bound(curve.jump_times.begin(), curve.jump_times.end(), t);
    if (it == curve.jump_times.begin()) return 0.0;
    return curve.jump_values[static_cast<std::size_t>(
        std::distance(curve.jump_times.begin(), it) - 1)];
}

// Left limit G(t-): a jump exactly at t is excluded.
inline double beran_eval_left(const BeranCurve& curve, double t) {
    auto it = std::lower_bound(curve.jump_times.begin(), curve.jump_times.end(), t);
    if (it == curve.jump_times.begin()) return 0.0;
    return curve.jump_values[static_cast<std::size_t>(
        std::distance(curve.jump_times.begin(), it) - 1)];
}

namespace detail {

// Product-limit core shared by the Beran estimator and the unconditional
// Kaplan-Meier of the censoring time: G(t) = 1 - prod over censored i with
// T_i <= t of (1 - k_i / sum_{T_j >= T_i} k_j). Observations with zero
// local weight contribute nothing. Tied times share one risk-set sum; at
// ties, uncensored observations are ranked before censored ones (the
// factors commute, the ordering only fixes the stored jump sequence).
inline BeranCurve product_limit_censoring(const Dataset& data,
                                          const std::vector<double>& k) {
    const int n = static_cast<int>(data.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& oa = data[static_cast<std::size_t>(a)];
        const auto& ob = data[static_cast<std::size_t>(b)];
        if (oa.t != ob.t) return oa.t < ob.t;
        if (oa.delta != ob.delta) return oa.delta > ob.delta;
        return a < b;
    });

    // suffix risk-set weight at each sorted position
    std::vector<double> suffix(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = n - 1; i >= 0; --i)
        suffix[static_cast<std::size_t>(i)] =
            suffix[static_cast<std::size_t>(i) + 1] +
            k[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];

    BeranCurve curve;
    double survival = 1.0;
    int i = 0;
    while (i < n) {
        int g = i;
        const double t = data[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])].t;
        while (g < n &&
               data[static_cast<std::size_t>(order[static_cast<std::size_t>(g)])].t == t)
            ++g;
        const double at_risk = suffix[static_cast<std::size_t>(i)];
        bool jumped = false;
        for (int j = i; j < g; ++j) {
            const auto& obs = data[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
            const double kw = k[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
            if (obs.delta == 1 || kw <= 0.0) continue;
            survival *= 1.0 - kw / at_risk;
            jumped = true;
        }
        if (jumped) {
            survival = std::clamp(survival, 0.0, 1.0);
            curve.jump_times.push_back(t);
            curve.jump_values.push_back(1.0 - survival);
        }
        i = g;
    }
    return curve;
}

}  // namespace detail

// Kernel-weighted product-limit estimate of P(C <= t | theta'X = z) with
// local weights K((theta'X_i - z) / a_n).
inline BeranCurve beran_fit(const Dataset& data, const Eigen::VectorXd& theta,
                            double z, double a_n, KernelSpec kernel) {
    const int d = dataset_dim(data);
    if (theta.size() != d)
        throw DimensionMismatch("beran_fit: theta dimension mismatch");
    if (!(a_n > 0.0)) throw Error("beran_fit: bandwidth must be positive");
    if (!has_continuous_second_derivative(kernel))
        throw Error("beran_fit: the conditional-distribution kernel needs a "
                    "continuous second derivative (use quartic or triweight)");

    std::vector<double> k(data.size());
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        k[i] = kernel_eval(kernel, (data[i].x.dot(theta) - z) / a_n);
        total += k[i];
    }
    if (total <= 0.0)
        throw EmptyWindow("beran_fit: all kernel weights vanish at z=" +
                          std::to_string(z));

    BeranCurve curve = detail::product_limit_censoring(data, k);
    curve.z = z;
    curve.bandwidth = a_n;
    return curve;
}

// Unconditional Kaplan-Meier of the censoring time (unit local weights).
inline BeranCurve km_censoring_fit(const Dataset& data) {
    dataset_dim(data);
    std::vector<double> k(data.size(), 1.0);
    return detail::product_limit_censoring(data, k);
}

}  // namespace cindex
