#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "cindex/dataset.hpp"
#include "cindex/errors.hpp"

namespace cindex {

// First-stage fit of the censoring-index parameter: Cox proportional
// hazards on the censoring time, i.e. the partial likelihood with event
// indicator 1 - delta and Breslow handling of ties.
struct CensoringIndexFit {
    Eigen::VectorXd theta_hat;
    double log_partial_likelihood = 0.0;
    double score_norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    // Set when the partial likelihood keeps improving along a diverging
    // parameter path (complete separation); theta_hat is then the capped
    // iterate and converged stays false.
    bool monotone_likelihood = false;
};

namespace detail {

struct CoxWork {
    std::vector<int> order;      // indices sorted by time ascending
    std::vector<int> is_event;   // 1 - delta in sorted order
    Eigen::MatrixXd x_sorted;    // covariates in sorted order (row per obs)
    std::vector<double> t_sorted;
    int n = 0;
    int d = 0;
    int n_events = 0;
};

inline CoxWork cox_prepare(const Dataset& data) {
    CoxWork w;
    w.d = dataset_dim(data);
    w.n = static_cast<int>(data.size());
    w.order.resize(static_cast<std::size_t>(w.n));
    std::iota(w.order.begin(), w.order.end(), 0);
    std::sort(w.order.begin(), w.order.end(), [&](int a, int b) {
        if (data[static_cast<std::size_t>(a)].t !=
            data[static_cast<std::size_t>(b)].t)
            return data[static_cast<std::size_t>(a)].t <
                   data[static_cast<std::size_t>(b)].t;
        return a < b;
    });
    w.x_sorted.resize(w.n, w.d);
    w.t_sorted.resize(static_cast<std::size_t>(w.n));
    w.is_event.resize(static_cast<std::size_t>(w.n));
    for (int i = 0; i < w.n; ++i) {
        const auto& obs = data[static_cast<std::size_t>(w.order[static_cast<std::size_t>(i)])];
        w.x_sorted.row(i) = obs.x.transpose();
        w.t_sorted[static_cast<std::size_t>(i)] = obs.t;
        w.is_event[static_cast<std::size_t>(i)] = 1 - obs.delta;
        w.n_events += 1 - obs.delta;
    }
    return w;
}

// Breslow log partial likelihood plus score and (negative) Hessian at
// theta. Works backwards over distinct times so the risk-set sums
// S0 = sum exp(eta), S1 = sum x exp(eta), S2 = sum x x' exp(eta) over
// {j : T_j >= t} are running suffix accumulations.
inline void cox_eval(const CoxWork& w, const Eigen::VectorXd& theta,
                     double* loglik, Eigen::VectorXd* score,
                     Eigen::MatrixXd* neg_hessian) {
    const int n = w.n;
    const int d = w.d;
    double ll = 0.0;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(d, d);
    const bool want_h = neg_hessian != nullptr;

    int i = n - 1;
    while (i >= 0) {
        int g = i;  // [g..i] is the tied-time group
        while (g > 0 && w.t_sorted[static_cast<std::size_t>(g - 1)] ==
                            w.t_sorted[static_cast<std::size_t>(i)])
            --g;
        for (int j = g; j <= i; ++j) {
            const double eta = w.x_sorted.row(j).dot(theta);
            const double e = std::exp(eta);
            s0 += e;
            s1.noalias() += e * w.x_sorted.row(j).transpose();
            if (want_h)
                s2.noalias() += e * w.x_sorted.row(j).transpose() *
                                w.x_sorted.row(j);
        }
        for (int j = g; j <= i; ++j) {
            if (!w.is_event[static_cast<std::size_t>(j)]) continue;
            const double eta = w.x_sorted.row(j).dot(theta);
            ll += eta - std::log(s0);
            const Eigen::VectorXd xbar = s1 / s0;
            u.noalias() += w.x_sorted.row(j).transpose() - xbar;
            if (want_h) h.noalias() += s2 / s0 - xbar * xbar.transpose();
        }
        i = g - 1;
    }
    if (loglik) *loglik = ll;
    if (score) *score = u;
    if (neg_hessian) *neg_hessian = h;
}

}  // namespace detail

inline Eigen::VectorXd cox_score(const Dataset& data,
                                 const Eigen::VectorXd& theta) {
    auto w = detail::cox_prepare(data);
    if (theta.size() != w.d)
        throw DimensionMismatch("cox_score: theta dimension mismatch");
    Eigen::VectorXd u;
    detail::cox_eval(w, theta, nullptr, &u, nullptr);
    return u;
}

inline double cox_log_partial_likelihood(const Dataset& data,
                                         const Eigen::VectorXd& theta) {
    auto w = detail::cox_prepare(data);
    if (theta.size() != w.d)
        throw DimensionMismatch("cox_log_partial_likelihood: dimension mismatch");
    double ll = 0.0;
    detail::cox_eval(w, theta, &ll, nullptr, nullptr);
    return ll;
}

// Newton-Raphson with step halving from theta = 0. Convergence is
// sup-norm of the score below tol. Iterates whose sup-norm exceeds
// theta_cap are treated as a diverging (monotone-likelihood) path.
inline CensoringIndexFit fit_cox(const Dataset& data, double tol = 1e-8,
                                 int max_iter = 50, double theta_cap = 15.0) {
    auto w = detail::cox_prepare(data);
    if (w.n_events == 0)
        throw NoCensoredObservations(
            "fit_cox: all observations are uncensored; the censoring "
            "partial likelihood has no events");

    CensoringIndexFit fit;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(w.d);
    double ll = 0.0;
    Eigen::VectorXd u(w.d);
    Eigen::MatrixXd h(w.d, w.d);
    detail::cox_eval(w, theta, &ll, &u, &h);

    for (int iter = 0; iter < max_iter; ++iter) {
        if (theta.lpNorm<Eigen::Infinity>() > theta_cap) {
            fit.monotone_likelihood = true;
            break;
        }
        if (u.lpNorm<Eigen::Infinity>() < tol) break;

        Eigen::LLT<Eigen::MatrixXd> llt(h);
        if (llt.info() != Eigen::Success)
            throw SingularHessian(
                "fit_cox: Newton step unsolvable (collinear covariates?)");
        Eigen::VectorXd step = llt.solve(u);

        // accept within the floating-point resolution of ll: near the
        // optimum the true gain per step is far below eps * |ll|
        const double accept_slack = 1e-10 * (std::abs(ll) + 1.0);
        double scale = 1.0;
        Eigen::VectorXd theta_new;
        double ll_new = -std::numeric_limits<double>::infinity();
        for (int half = 0; half < 30; ++half) {
            theta_new = theta + scale * step;
            detail::cox_eval(w, theta_new, &ll_new, nullptr, nullptr);
            if (ll_new >= ll - accept_slack) break;
            scale *= 0.5;
        }
        theta = theta_new;
        detail::cox_eval(w, theta, &ll, &u, &h);
        fit.iterations = iter + 1;
    }

    fit.theta_hat = theta;
    fit.log_partial_likelihood = ll;
    fit.score_norm = u.lpNorm<Eigen::Infinity>();
    fit.converged = !fit.monotone_likelihood && fit.score_norm < tol;
    return fit;
}

}  // namespace cindex
