#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cindex {

struct NelderMeadOptions {
    double f_tol = 1e-9;       // spread of simplex values
    double x_tol = 1e-6;       // simplex diameter, sup-norm
    int max_evals = 400;
    double initial_step = 0.25;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double fx = std::numeric_limits<double>::infinity();
    int evaluations = 0;
    bool converged = false;
};

// Derivative-free simplex minimizer with optional box projection: every
// candidate is clamped into [lower, upper] before evaluation, so the best
// vertex is always feasible. The returned point is the best vertex, which
// by construction is the minimum over every point evaluated.
template <class Fn>
NelderMeadResult nelder_mead(Fn&& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& opts = {},
                             const Eigen::VectorXd* lower = nullptr,
                             const Eigen::VectorXd* upper = nullptr) {
    const int dim = static_cast<int>(x0.size());
    NelderMeadResult res;
    if (dim == 0) {
        res.x = x0;
        res.fx = f(x0);
        res.evaluations = 1;
        res.converged = true;
        return res;
    }

    auto clamp = [&](Eigen::VectorXd v) {
        if (lower)
            for (int j = 0; j < dim; ++j) v[j] = std::max(v[j], (*lower)[j]);
        if (upper)
            for (int j = 0; j < dim; ++j) v[j] = std::min(v[j], (*upper)[j]);
        return v;
    };

    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& v) {
        ++evals;
        return f(v);
    };

    std::vector<Eigen::VectorXd> simplex;
    std::vector<double> fv;
    simplex.reserve(static_cast<std::size_t>(dim) + 1);
    simplex.push_back(clamp(x0));
    fv.push_back(eval(simplex[0]));
    for (int j = 0; j < dim; ++j) {
        Eigen::VectorXd v = simplex[0];
        v[j] += opts.initial_step;
        v = clamp(v);
        if ((v - simplex[0]).lpNorm<Eigen::Infinity>() < 0.5 * opts.initial_step) {
            v = simplex[0];
            v[j] -= opts.initial_step;
            v = clamp(v);
        }
        simplex.push_back(v);
        fv.push_back(eval(v));
    }

    std::vector<int> rank(simplex.size());
    auto sort_rank = [&]() {
        for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = static_cast<int>(i);
        std::sort(rank.begin(), rank.end(),
                  [&](int a, int b) { return fv[static_cast<std::size_t>(a)] <
                                             fv[static_cast<std::size_t>(b)]; });
    };

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    while (evals < opts.max_evals) {
        sort_rank();
        const int best = rank.front();
        const int worst = rank.back();
        const int second_worst = rank[rank.size() - 2];

        double diam = 0.0;
        for (std::size_t i = 1; i < simplex.size(); ++i)
            diam = std::max(diam, (simplex[i] - simplex[0]).lpNorm<Eigen::Infinity>());
        const double fspread = fv[static_cast<std::size_t>(worst)] -
                               fv[static_cast<std::size_t>(best)];
        if (fspread <= opts.f_tol * (std::abs(fv[static_cast<std::size_t>(best)]) + opts.f_tol) &&
            diam <= opts.x_tol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (std::size_t i = 0; i < simplex.size(); ++i)
            if (static_cast<int>(i) != worst) centroid += simplex[i];
        centroid /= static_cast<double>(dim);

        Eigen::VectorXd xr = clamp(centroid + alpha * (centroid - simplex[static_cast<std::size_t>(worst)]));
        const double fr = eval(xr);
        if (fr < fv[static_cast<std::size_t>(best)]) {
            Eigen::VectorXd xe = clamp(centroid + gamma * (centroid - simplex[static_cast<std::size_t>(worst)]));
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[static_cast<std::size_t>(worst)] = xe;
                fv[static_cast<std::size_t>(worst)] = fe;
            } else {
                simplex[static_cast<std::size_t>(worst)] = xr;
                fv[static_cast<std::size_t>(worst)] = fr;
            }
        } else if (fr < fv[static_cast<std::size_t>(second_worst)]) {
            simplex[static_cast<std::size_t>(worst)] = xr;
            fv[static_cast<std::size_t>(worst)] = fr;
        } else {
            Eigen::VectorXd xc = clamp(centroid + rho * (simplex[static_cast<std::size_t>(worst)] - centroid));
            const double fc = eval(xc);
            if (fc < fv[static_cast<std::size_t>(worst)]) {
                simplex[static_cast<std::size_t>(worst)] = xc;
                fv[static_cast<std::size_t>(worst)] = fc;
            } else {
                for (std::size_t i = 0; i < simplex.size(); ++i) {
                    if (static_cast<int>(i) == best) continue;
                    simplex[i] = clamp(simplex[static_cast<std::size_t>(best)] +
                                       sigma * (simplex[i] - simplex[static_cast<std::size_t>(best)]));
                    fv[i] = eval(simplex[i]);
                }
            }
        }
    }

    sort_rank();
    res.x = simplex[static_cast<std::size_t>(rank.front())];
    res.fx = fv[static_cast<std::size_t>(rank.front())];
    res.evaluations = evals;
    return res;
}

}  // namespace cindex
