#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cindex/cox.hpp"
#include "cindex/dataset.hpp"
#include "cindex/errors.hpp"
#include "cindex/index_regression.hpp"
#include "cindex/parallel.hpp"
#include "cindex/rng.hpp"
#include "cindex/weighted_measure.hpp"

namespace cindex {

// Which censoring-distribution estimate feeds the weighting step:
// Beran conditional on the fitted censoring index (the proposed route) or
// the unconditional Kaplan-Meier comparator.
enum class WeightRoute { ConditionalKM, KaplanMeier };

// End-to-end configuration: data -> Cox -> weighted measure -> bandwidth
// selection -> two-stage index fit.
struct PipelineConfig {
    double a_n = 2.0;
    std::vector<double> h_grid = {0.6, 0.7, 0.8, 0.9, 1.0,
                                  1.1, 1.2, 1.3, 1.4, 1.5};
    double tau_quantile = 0.9;
    KernelSpec kernel_beran = quartic_kernel();
    IndexFitConfig index;
    double cox_tol = 1e-8;
    int cox_max_iter = 50;
};

struct PipelineResult {
    std::optional<CensoringIndexFit> cox;  // absent when nothing is censored
    WeightedMeasure measure;
    IndexFit fit;
    double tau = 0.0;
    WeightRoute route = WeightRoute::ConditionalKM;
    bool cox_skipped_uncensored = false;
};

inline WeightedMeasure build_route_measure(const Dataset& data,
                                           const PipelineConfig& cfg,
                                           WeightRoute route,
                                           std::optional<CensoringIndexFit>* cox_out,
                                           bool* cox_skipped) {
    if (cox_skipped) *cox_skipped = false;
    if (route == WeightRoute::KaplanMeier) return build_km_measure(data);
    if (count_censored(data) == 0) {
        // Degenerate but valid: weights are uniformly 1/n either way.
        if (cox_skipped) *cox_skipped = true;
        return build_km_measure(data);
    }
    CensoringIndexFit cox = fit_cox(data, cfg.cox_tol, cfg.cox_max_iter);
    WeightedMeasure m =
        build_weighted_measure(data, cox.theta_hat, cfg.a_n, cfg.kernel_beran);
    if (cox_out) *cox_out = std::move(cox);
    return m;
}

// Full fit of one dataset along one weighting route.
inline PipelineResult fit_pipeline(const Dataset& data, const PipelineConfig& cfg,
                                   WeightRoute route) {
    PipelineResult res;
    res.route = route;
    res.tau = uncensored_time_quantile(data, cfg.tau_quantile);
    res.measure = build_route_measure(data, cfg, route, &res.cox,
                                      &res.cox_skipped_uncensored);
    select_bandwidth(res.measure, cfg.index, cfg.h_grid, res.tau, &res.fit);
    return res;
}

using BootstrapResampler = std::function<std::vector<int>(int replicate, int n)>;

inline BootstrapResampler seeded_resampler(std::uint64_t seed) {
    return [seed](int replicate, int n) {
        auto eng = make_engine(seed, static_cast<std::uint64_t>(replicate));
        std::uniform_int_distribution<int> pick(0, n - 1);
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (auto& v : idx) v = pick(eng);
        return idx;
    };
}

// Nonparametric bootstrap of the final index estimate: resample triples
// with replacement, rerun the whole pipeline, return the empirical
// covariance of the free coordinates. Replicate k's draws depend only on
// (seed, k), so results are identical for any thread count.
inline Eigen::MatrixXd bootstrap_covariance(
    const Dataset& data, const PipelineConfig& cfg, int n_boot,
    std::uint64_t seed, int n_threads = 1, int* failures_out = nullptr,
    const BootstrapResampler& resampler_override = nullptr) {
    if (n_boot < 2) throw Error("bootstrap_covariance: need at least 2 replicates");
    const int n = static_cast<int>(data.size());
    const int nfree = dataset_dim(data) - 1;
    const BootstrapResampler resampler =
        resampler_override ? resampler_override : seeded_resampler(seed);

    std::vector<std::optional<Eigen::VectorXd>> draws(
        static_cast<std::size_t>(n_boot));
    parallel_for(static_cast<std::size_t>(n_boot), n_threads, [&](std::size_t k) {
        const auto idx = resampler(static_cast<int>(k), n);
        Dataset resample;
        resample.reserve(static_cast<std::size_t>(n));
        for (int i : idx) resample.push_back(data[static_cast<std::size_t>(i)]);
        try {
            PipelineResult r =
                fit_pipeline(resample, cfg, WeightRoute::ConditionalKM);
            draws[k] = r.fit.beta_hat.free;
        } catch (const Error&) {
            draws[k] = std::nullopt;
        }
    });

    int ok = 0;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(nfree);
    for (const auto& d : draws)
        if (d) {
            mean += *d;
            ++ok;
        }
    const int failures = n_boot - ok;
    if (failures_out) *failures_out = failures;
    if (failures * 5 > n_boot)
        throw ReplicateFailure("bootstrap_covariance: " + std::to_string(failures) +
                               " of " + std::to_string(n_boot) +
                               " replicates failed");
    if (ok < 2)
        throw ReplicateFailure("bootstrap_covariance: fewer than 2 usable replicates");
    mean /= static_cast<double>(ok);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(nfree, nfree);
    for (const auto& d : draws)
        if (d) {
            const Eigen::VectorXd c = *d - mean;
            cov.noalias() += c * c.transpose();
        }
    return cov / static_cast<double>(ok - 1);
}

}  // namespace cindex
