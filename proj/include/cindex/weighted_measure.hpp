#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "cindex/beran.hpp"
#include "cindex/dataset.hpp"
#include "cindex/errors.hpp"
#include "cindex/kernels.hpp"

namespace cindex {

// Floor applied to 1 - G(T-) before inversion. Activations are counted;
// with the usual tau-truncation the guard should stay silent.
inline constexpr double kSurvivalFloor = 1e-10;

// Discrete weighted joint measure on the uncensored observations:
// mass w_i = 1 / (n (1 - G(T_i- | .))) at (X_i, T_i) for delta_i = 1.
// Censored observations carry zero mass and are not stored.
struct WeightedMeasure {
    Eigen::MatrixXd x;   // support covariates, one row per point
    Eigen::VectorXd y;   // support responses (uncensored follow-up times)
    Eigen::VectorXd w;   // non-negative weights
    int sample_size = 0; // n of the originating dataset
    int guard_activations = 0;
    double total_mass = 0.0;

    int size() const { return static_cast<int>(y.size()); }
    int dim() const { return static_cast<int>(x.cols()); }

    // Diagnostic view only; the estimator itself is not self-normalizing.
    Eigen::VectorXd normalized_weights() const {
        return total_mass > 0.0 ? Eigen::VectorXd(w / total_mass)
                                : Eigen::VectorXd(w);
    }
};

namespace detail {

struct MeasureBuilder {
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> ys;
    std::vector<double> ws;
    int guard = 0;

    void add(const ObservedTriple& obs, int n, double g_left) {
        double denom = 1.0 - g_left;
        if (denom < kSurvivalFloor) {
            denom = kSurvivalFloor;
            ++guard;
        }
        xs.push_back(obs.x);
        ys.push_back(obs.t);
        ws.push_back(1.0 / (static_cast<double>(n) * denom));
    }

    WeightedMeasure finish(int n, int d) const {
        WeightedMeasure m;
        const int s = static_cast<int>(ys.size());
        m.x.resize(s, d);
        m.y.resize(s);
        m.w.resize(s);
        for (int i = 0; i < s; ++i) {
            m.x.row(i) = xs[static_cast<std::size_t>(i)].transpose();
            m.y[i] = ys[static_cast<std::size_t>(i)];
            m.w[i] = ws[static_cast<std::size_t>(i)];
        }
        m.sample_size = n;
        m.guard_activations = guard;
        m.total_mass = m.w.sum();
        return m;
    }
};

}  // namespace detail

// Beran-weighted measure: one conditional censoring curve per distinct
// index value theta'X_i (cache keyed on the index value to 1e-12).
inline WeightedMeasure build_weighted_measure(const Dataset& data,
                                              const Eigen::VectorXd& theta,
                                              double a_n, KernelSpec kernel) {
    const int d = dataset_dim(data);
    if (theta.size() != d)
        throw DimensionMismatch("build_weighted_measure: theta dimension mismatch");
    const int n = static_cast<int>(data.size());

    std::map<long long, BeranCurve> cache;
    const double key_scale = 1e12;
    auto curve_at = [&](double z) -> const BeranCurve& {
        const long long key = static_cast<long long>(std::llround(z * key_scale));
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, beran_fit(data, theta, z, a_n, kernel)).first;
        return it->second;
    };

    detail::MeasureBuilder builder;
    for (const auto& obs : data) {
        if (obs.delta != 1) continue;
        const double z = obs.x.dot(theta);
        builder.add(obs, n, beran_eval_left(curve_at(z), obs.t));
    }
    return builder.finish(n, d);
}

// Comparator measure with the unconditional Kaplan-Meier of the censoring
// time in place of the Beran estimate.
inline WeightedMeasure build_km_measure(const Dataset& data) {
    const int d = dataset_dim(data);
    const int n = static_cast<int>(data.size());
    const BeranCurve km = km_censoring_fit(data);
    detail::MeasureBuilder builder;
    for (const auto& obs : data) {
        if (obs.delta != 1) continue;
        builder.add(obs, n, beran_eval_left(km, obs.t));
    }
    return builder.finish(n, d);
}

// sum_i w_i 1{y_i <= y, x_i <= x componentwise}
inline double eval_cdf(const WeightedMeasure& m, const Eigen::VectorXd& x,
                       double y) {
    if (x.size() != m.dim())
        throw DimensionMismatch("eval_cdf: query dimension mismatch");
    double acc = 0.0;
    for (int i = 0; i < m.size(); ++i) {
        if (m.y[i] > y) continue;
        bool below = true;
        for (int j = 0; j < m.dim(); ++j) {
            if (m.x(i, j) > x[j]) {
                below = false;
                break;
            }
        }
        if (below) acc += m.w[i];
    }
    return acc;
}

// sum_i w_i phi(x_i, y_i)
template <class Fn>
double integrate(const WeightedMeasure& m, Fn&& phi) {
    double acc = 0.0;
    for (int i = 0; i < m.size(); ++i)
        acc += m.w[i] * phi(Eigen::VectorXd(m.x.row(i).transpose()), m.y[i]);
    return acc;
}

}  // namespace cindex
