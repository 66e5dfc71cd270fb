#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cindex/dataset.hpp"
#include "cindex/errors.hpp"
#include "cindex/rng.hpp"

namespace cindex {

// The two regression links of the simulation design.
enum class SimModel { m1, m2 };

inline double sim_link(SimModel model, double u) {
    return model == SimModel::m1 ? u - 0.5 * u * u : std::log(1.0 + 0.5 * u);
}

inline std::string sim_model_name(SimModel model) {
    return model == SimModel::m1 ? "m1" : "m2";
}

inline SimModel sim_model_from_name(const std::string& name) {
    if (name == "m1") return SimModel::m1;
    if (name == "m2") return SimModel::m2;
    throw SchemaError("unknown simulation model: " + name);
}

inline Eigen::VectorXd sim_beta0() {
    Eigen::VectorXd b(4);
    b << 1.0, 0.75, 0.25, -0.5;
    return b;
}

inline Eigen::VectorXd sim_theta0() {
    Eigen::VectorXd t(4);
    t << -0.1, -0.2, 0.1, -0.3;
    return t;
}

// X ~ U[0,1]^4 i.i.d., Y = m(beta0'X) + N(0,1), C exponential with mean
// gamma * exp(theta0'X).
struct SimScenario {
    SimModel model = SimModel::m1;
    int n = 200;
    double gamma = 1.0;
    Eigen::VectorXd beta0 = sim_beta0();
    Eigen::VectorXd theta0 = sim_theta0();
    double target_censoring = 0.0;  // informational; gamma drives the draw
    std::uint64_t seed = 0;
};

inline Dataset simulate_dataset(const SimScenario& s) {
    if (s.n <= 0) throw Error("simulate_dataset: n must be positive");
    if (!(s.gamma > 0.0)) throw Error("simulate_dataset: gamma must be positive");
    const int d = static_cast<int>(s.beta0.size());
    if (s.theta0.size() != d)
        throw DimensionMismatch("simulate_dataset: beta0/theta0 dimensions differ");
    auto eng = make_engine(s.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::exponential_distribution<double> unit_exp(1.0);

    Dataset data;
    data.reserve(static_cast<std::size_t>(s.n));
    for (int i = 0; i < s.n; ++i) {
        ObservedTriple obs;
        obs.x.resize(d);
        for (int j = 0; j < d; ++j) obs.x[j] = unif(eng);
        const double y = sim_link(s.model, obs.x.dot(s.beta0)) + gauss(eng);
        const double c = s.gamma * std::exp(obs.x.dot(s.theta0)) * unit_exp(eng);
        obs.t = std::min(y, c);
        obs.delta = y <= c ? 1 : 0;
        data.push_back(std::move(obs));
    }
    return data;
}

// Bisection for the gamma giving a target average censoring proportion.
// The pilot draws (X, eps, unit exponentials) are fixed by the seed and
// shared across gamma values, so the censoring fraction is monotone
// non-increasing in gamma and the search is deterministic.
inline double calibrate_gamma(SimModel model, double target_censoring,
                              std::uint64_t seed, int pilot_n = 100000,
                              double tol = 0.005) {
    if (!(target_censoring > 0.0 && target_censoring < 1.0))
        throw Error("calibrate_gamma: target must lie in (0,1)");
    const Eigen::VectorXd beta0 = sim_beta0();
    const Eigen::VectorXd theta0 = sim_theta0();
    auto eng = make_engine(seed, 0xCA11u);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::exponential_distribution<double> unit_exp(1.0);

    std::vector<double> y(static_cast<std::size_t>(pilot_n));
    std::vector<double> scale(static_cast<std::size_t>(pilot_n));  // exp(theta0'x) * E
    Eigen::VectorXd x(beta0.size());
    for (int i = 0; i < pilot_n; ++i) {
        for (int j = 0; j < x.size(); ++j) x[j] = unif(eng);
        y[static_cast<std::size_t>(i)] = sim_link(model, x.dot(beta0)) + gauss(eng);
        scale[static_cast<std::size_t>(i)] = std::exp(x.dot(theta0)) * unit_exp(eng);
    }
    auto censored_fraction = [&](double gamma) {
        int censored = 0;
        for (int i = 0; i < pilot_n; ++i)
            if (y[static_cast<std::size_t>(i)] >
                gamma * scale[static_cast<std::size_t>(i)])
                ++censored;
        return static_cast<double>(censored) / static_cast<double>(pilot_n);
    };

    double lo = 1e-3, hi = 1e3;
    double f_lo = censored_fraction(lo);  // the most censoring achievable
    double f_hi = censored_fraction(hi);
    if (f_lo + tol < target_censoring)
        throw BracketFailure("calibrate_gamma: target " +
                             std::to_string(target_censoring) +
                             " exceeds reachable censoring " + std::to_string(f_lo));
    if (f_hi > target_censoring + tol)
        throw BracketFailure("calibrate_gamma: censoring still above target at "
                             "the upper gamma bracket");
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = censored_fraction(mid);
        if (std::abs(f_mid - target_censoring) <= tol) return mid;
        if (f_mid > target_censoring)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace cindex
