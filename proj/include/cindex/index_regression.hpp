#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "cindex/errors.hpp"
#include "cindex/kernels.hpp"
#include "cindex/nelder_mead.hpp"
#include "cindex/rng.hpp"
#include "cindex/weighted_measure.hpp"

namespace cindex {

// Index parameter under the normalization beta^(1) = 1: only the last
// d-1 coordinates are free, the materialized vector is (1, free).
struct IndexParams {
    Eigen::VectorXd free;

    IndexParams() = default;
    explicit IndexParams(Eigen::VectorXd f) : free(std::move(f)) {}

    int dim() const { return static_cast<int>(free.size()) + 1; }

    Eigen::VectorXd full() const {
        Eigen::VectorXd beta(free.size() + 1);
        beta[0] = 1.0;
        beta.tail(free.size()) = free;
        return beta;
    }
};

enum class TrimmingMode { PreliminaryBox, RefinedDensity };

// Either the naive box trimming 1{x in B} or the refined density trimming
// 1{density of beta_ref'X given Y <= tau, at beta_ref'x, above c}. The
// trimming index beta_ref is frozen; it does not move with the candidate
// beta during optimization.
struct TrimmingSpec {
    TrimmingMode mode = TrimmingMode::PreliminaryBox;
    Eigen::VectorXd box_lower;
    Eigen::VectorXd box_upper;
    double c = 0.0;
    double b_n = 0.0;
    IndexParams beta_ref;

    static TrimmingSpec preliminary_box(Eigen::VectorXd lower,
                                        Eigen::VectorXd upper) {
        if (lower.size() != upper.size() || ((upper - lower).array() < 0.0).any())
            throw Error("trimming box: lower must be <= upper componentwise");
        TrimmingSpec t;
        t.mode = TrimmingMode::PreliminaryBox;
        t.box_lower = std::move(lower);
        t.box_upper = std::move(upper);
        return t;
    }

    static TrimmingSpec refined_density(double c, double b_n,
                                        IndexParams beta_ref) {
        if (!(c > 0.0)) throw Error("refined trimming: c must be positive");
        if (!(b_n > 0.0)) throw Error("refined trimming: b_n must be positive");
        TrimmingSpec t;
        t.mode = TrimmingMode::RefinedDensity;
        t.c = c;
        t.b_n = b_n;
        t.beta_ref = std::move(beta_ref);
        return t;
    }
};

struct CriterionDiagnostics {
    int support_points = 0;   // support size of the measure
    int kept = 0;             // points entering the sum (trim and y <= tau)
    int excluded_empty_neighborhood = 0;
};

// Weighted Nadaraya-Watson estimate of E[Y | beta'X = t, Y <= tau] over
// the measure's support.
inline double link_estimate(const WeightedMeasure& m, const IndexParams& beta,
                            double t, double h, double tau, KernelSpec kernel) {
    if (beta.dim() != m.dim())
        throw DimensionMismatch("link_estimate: beta dimension mismatch");
    if (!(h > 0.0)) throw Error("link_estimate: bandwidth must be positive");
    const Eigen::VectorXd b = beta.full();
    double num = 0.0, den = 0.0;
    for (int i = 0; i < m.size(); ++i) {
        if (m.y[i] > tau) continue;
        const double kk = m.w[i] * kernel_eval(kernel, (m.x.row(i).dot(b) - t) / h);
        num += kk * m.y[i];
        den += kk;
    }
    if (den <= 0.0)
        throw EmptyNeighborhood("link_estimate: zero denominator at t=" +
                                std::to_string(t));
    return num / den;
}

// Gradient of the map beta -> f_hat(beta'x_query; beta) in the d-1 free
// coordinates, by the quotient rule through the kernel derivative.
inline Eigen::VectorXd link_gradient(const WeightedMeasure& m,
                                     const IndexParams& beta,
                                     const Eigen::VectorXd& x_query, double h,
                                     double tau, KernelSpec kernel) {
    if (beta.dim() != m.dim() || x_query.size() != m.dim())
        throw DimensionMismatch("link_gradient: dimension mismatch");
    if (!(h > 0.0)) throw Error("link_gradient: bandwidth must be positive");
    const Eigen::VectorXd b = beta.full();
    const int nfree = beta.dim() - 1;
    const double t = x_query.dot(b);
    double num = 0.0, den = 0.0;
    Eigen::VectorXd dnum = Eigen::VectorXd::Zero(nfree);
    Eigen::VectorXd dden = Eigen::VectorXd::Zero(nfree);
    for (int i = 0; i < m.size(); ++i) {
        if (m.y[i] > tau) continue;
        const double u = (m.x.row(i).dot(b) - t) / h;
        const double kk = m.w[i] * kernel_eval(kernel, u);
        const double kd = m.w[i] * kernel_derivative(kernel, u, 1) / h;
        num += kk * m.y[i];
        den += kk;
        for (int l = 0; l < nfree; ++l) {
            const double dx = m.x(i, l + 1) - x_query[l + 1];
            dnum[l] += kd * dx * m.y[i];
            dden[l] += kd * dx;
        }
    }
    if (den <= 0.0)
        throw EmptyNeighborhood("link_gradient: zero denominator");
    return (dnum * den - num * dden) / (den * den);
}

// Kernel estimate of the density of beta'X conditional on Y <= tau,
// normalized by the tau-truncated weight mass. Returns 0 where no mass is
// within bandwidth reach.
inline double trimming_density(const WeightedMeasure& m, const IndexParams& beta,
                               double t, double b_n, double tau,
                               KernelSpec kernel) {
    if (beta.dim() != m.dim())
        throw DimensionMismatch("trimming_density: beta dimension mismatch");
    if (!(b_n > 0.0)) throw Error("trimming_density: bandwidth must be positive");
    const Eigen::VectorXd b = beta.full();
    double mass = 0.0, acc = 0.0;
    for (int i = 0; i < m.size(); ++i) {
        if (m.y[i] > tau) continue;
        mass += m.w[i];
        acc += m.w[i] * kernel_eval(kernel, (m.x.row(i).dot(b) - t) / b_n);
    }
    if (mass <= 0.0) return 0.0;
    return acc / (b_n * mass);
}

namespace detail {

inline bool in_box(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    for (int j = 0; j < x.size(); ++j)
        if (x[j] < lower[j] || x[j] > upper[j]) return false;
    return true;
}

inline int min_kept_support(int support) {
    const int want = std::max(10, (support + 9) / 10);
    return std::min(support, want);
}

// Prepared least-squares criterion for one (measure, trimming, h, tau)
// combination. The trimming mask does not depend on the candidate beta, so
// it is evaluated once; value() is then O(kept * tau_kept) per candidate.
class CriterionContext {
public:
    CriterionContext(const WeightedMeasure& m, double h, double tau,
                     const TrimmingSpec& trim, KernelSpec kernel)
        : h_(h), kernel_(kernel) {
        if (!(h > 0.0)) throw Error("criterion: bandwidth must be positive");
        const int s = m.size();
        const int d = m.dim();
        if (trim.mode == TrimmingMode::PreliminaryBox) {
            if (trim.box_lower.size() != d)
                throw DimensionMismatch("criterion: trimming box dimension");
        } else if (trim.beta_ref.dim() != d) {
            throw DimensionMismatch("criterion: trimming index dimension");
        }

        std::vector<int> tau_rows;
        tau_rows.reserve(static_cast<std::size_t>(s));
        for (int i = 0; i < s; ++i)
            if (m.y[i] <= tau) tau_rows.push_back(i);
        const int sk = static_cast<int>(tau_rows.size());
        xk_.resize(sk, d);
        yk_.resize(sk);
        wk_.resize(sk);
        for (int r = 0; r < sk; ++r) {
            const int i = tau_rows[static_cast<std::size_t>(r)];
            xk_.row(r) = m.x.row(i);
            yk_[r] = m.y[i];
            wk_[r] = m.w[i];
        }

        eval_rows_.reserve(static_cast<std::size_t>(sk));
        if (trim.mode == TrimmingMode::PreliminaryBox) {
            for (int r = 0; r < sk; ++r)
                if (in_box(xk_.row(r), trim.box_lower, trim.box_upper))
                    eval_rows_.push_back(r);
        } else {
            const Eigen::VectorXd bref = trim.beta_ref.full();
            const Eigen::VectorXd zref = xk_ * bref;
            for (int r = 0; r < sk; ++r) {
                if (trimming_density_compact(zref, zref[r], trim.b_n) > trim.c)
                    eval_rows_.push_back(r);
            }
        }

        support_points_ = s;
        kept_ = static_cast<int>(eval_rows_.size());
        if (kept_ < min_kept_support(s))
            throw IllConditionedTrim(
                "criterion: trimming keeps " + std::to_string(kept_) + " of " +
                std::to_string(s) + " support points (need " +
                std::to_string(min_kept_support(s)) + ")");
    }

    int support_points() const { return support_points_; }
    int kept() const { return kept_; }
    int tau_kept() const { return static_cast<int>(yk_.size()); }

    double value(const Eigen::VectorXd& beta_full,
                 CriterionDiagnostics* diag = nullptr) const {
        switch (kernel_.family) {
            case KernelFamily::Quartic:
                return value_impl<KernelFamily::Quartic>(beta_full, diag);
            case KernelFamily::Epanechnikov:
                return value_impl<KernelFamily::Epanechnikov>(beta_full, diag);
            case KernelFamily::Triweight:
                return value_impl<KernelFamily::Triweight>(beta_full, diag);
        }
        return 0.0;
    }

private:
    // density of the frozen trimming index over the tau-kept points,
    // matching trimming_density() on the full measure
    double trimming_density_compact(const Eigen::VectorXd& zref, double t,
                                    double b_n) const {
        double mass = 0.0, acc = 0.0;
        for (int j = 0; j < zref.size(); ++j) {
            mass += wk_[j];
            acc += wk_[j] * kernel_eval(kernel_, (zref[j] - t) / b_n);
        }
        if (mass <= 0.0) return 0.0;
        return acc / (b_n * mass);
    }

    template <KernelFamily F>
    double value_impl(const Eigen::VectorXd& beta_full,
                      CriterionDiagnostics* diag) const {
        const Eigen::VectorXd z = xk_ * beta_full;
        const double inv_h = 1.0 / h_;
        const int sk = static_cast<int>(yk_.size());
        double total = 0.0;
        int excluded = 0;
        for (int r : eval_rows_) {
            const double t = z[r];
            double num = 0.0, den = 0.0;
            for (int j = 0; j < sk; ++j) {
                const double kk =
                    wk_[j] * kernel_eval_fixed<F>((z[j] - t) * inv_h);
                num += kk * yk_[j];
                den += kk;
            }
            if (den <= 0.0) {
                ++excluded;
                continue;
            }
            const double resid = yk_[r] - num / den;
            total += wk_[r] * resid * resid;
        }
        if (diag) {
            diag->support_points = support_points_;
            diag->kept = kept_;
            diag->excluded_empty_neighborhood = excluded;
        }
        return total;
    }

    Eigen::MatrixXd xk_;
    Eigen::VectorXd yk_;
    Eigen::VectorXd wk_;
    std::vector<int> eval_rows_;
    double h_;
    KernelSpec kernel_;
    int support_points_ = 0;
    int kept_ = 0;
};

}  // namespace detail

// Trimmed least-squares criterion M_n: the weighted sum over kept support
// points of the squared Nadaraya-Watson residual. Points whose smoother
// denominator vanishes are excluded and counted in the diagnostics.
inline double criterion_Mn(const WeightedMeasure& m, const IndexParams& beta,
                           double h, double tau, const TrimmingSpec& trim,
                           KernelSpec kernel,
                           CriterionDiagnostics* diag = nullptr) {
    if (beta.dim() != m.dim())
        throw DimensionMismatch("criterion_Mn: beta dimension mismatch");
    detail::CriterionContext ctx(m, h, tau, trim, kernel);
    return ctx.value(beta.full(), diag);
}

// Preliminary box from per-coordinate support quantiles.
inline TrimmingSpec preliminary_box_from_support(const WeightedMeasure& m,
                                                 double q_low = 0.05,
                                                 double q_high = 0.95) {
    const int d = m.dim();
    const int s = m.size();
    if (s == 0) throw Error("preliminary box: empty support");
    Eigen::VectorXd lower(d), upper(d);
    std::vector<double> col(static_cast<std::size_t>(s));
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < s; ++i) col[static_cast<std::size_t>(i)] = m.x(i, j);
        std::sort(col.begin(), col.end());
        auto at = [&](double q) {
            const double pos = q * static_cast<double>(s - 1);
            const std::size_t lo = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(lo);
            if (lo + 1 >= col.size()) return col.back();
            return col[lo] * (1.0 - frac) + col[lo + 1] * frac;
        };
        lower[j] = at(q_low);
        upper[j] = at(q_high);
    }
    return TrimmingSpec::preliminary_box(std::move(lower), std::move(upper));
}

// Default multi-start set: the zero vector plus seeded uniform
// perturbations in [-scale, scale]^(d-1).
inline std::vector<IndexParams> default_starts(int n_free, int n_starts,
                                               std::uint64_t seed,
                                               double scale = 1.0) {
    std::vector<IndexParams> starts;
    starts.emplace_back(Eigen::VectorXd::Zero(n_free));
    auto eng = make_engine(seed, 0x5747u);
    std::uniform_real_distribution<double> unif(-scale, scale);
    for (int k = 1; k < n_starts; ++k) {
        Eigen::VectorXd v(n_free);
        for (int j = 0; j < n_free; ++j) v[j] = unif(eng);
        starts.emplace_back(std::move(v));
    }
    return starts;
}

// Preliminary estimator: multi-start Nelder-Mead minimization of the
// box-trimmed criterion over the free coordinates, constrained to the
// compact parameter set [-param_bound, param_bound]^(d-1). The constraint
// is not cosmetic: far outside it every support point becomes isolated at
// the criterion's bandwidth, each point interpolates itself and the
// criterion collapses to a spurious zero. Returns the best point evaluated
// across all starts.
inline IndexParams fit_preliminary(const WeightedMeasure& m, double h,
                                   double tau, const TrimmingSpec& trim_box,
                                   KernelSpec kernel,
                                   const std::vector<IndexParams>& starts,
                                   const NelderMeadOptions& nm_opts = {},
                                   double* criterion_out = nullptr,
                                   double param_bound = 2.0) {
    if (starts.empty()) throw Error("fit_preliminary: no starts given");
    if (!(param_bound > 0.0))
        throw Error("fit_preliminary: param_bound must be positive");
    const int nfree = m.dim() - 1;
    if (nfree == 0) {
        IndexParams beta{Eigen::VectorXd(0)};
        if (criterion_out) {
            detail::CriterionContext ctx(m, h, tau, trim_box, kernel);
            *criterion_out = ctx.value(beta.full());
        }
        return beta;
    }
    detail::CriterionContext ctx(m, h, tau, trim_box, kernel);
    auto objective = [&](const Eigen::VectorXd& free) {
        Eigen::VectorXd beta(nfree + 1);
        beta[0] = 1.0;
        beta.tail(nfree) = free;
        return ctx.value(beta);
    };
    const Eigen::VectorXd lower =
        Eigen::VectorXd::Constant(nfree, -param_bound);
    const Eigen::VectorXd upper = Eigen::VectorXd::Constant(nfree, param_bound);
    Eigen::VectorXd best_x;
    double best_f = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        if (start.dim() != m.dim())
            throw DimensionMismatch("fit_preliminary: start dimension mismatch");
        auto r = nelder_mead(objective, start.free, nm_opts, &lower, &upper);
        if (r.fx < best_f) {
            best_f = r.fx;
            best_x = r.x;
        }
    }
    if (criterion_out) *criterion_out = best_f;
    return IndexParams{best_x};
}

// Threshold giving the refined trimming that keeps ~95% of the
// tau-truncated mass at the preliminary index.
inline double calibrate_refined_threshold(const WeightedMeasure& m,
                                          const IndexParams& beta_ref,
                                          double b_n, double tau,
                                          KernelSpec kernel,
                                          double keep_mass = 0.95) {
    const Eigen::VectorXd bref = beta_ref.full();
    std::vector<std::pair<double, double>> density_weight;
    double mass = 0.0;
    for (int i = 0; i < m.size(); ++i) {
        if (m.y[i] > tau) continue;
        const double rho =
            trimming_density(m, beta_ref, m.x.row(i).dot(bref), b_n, tau, kernel);
        density_weight.emplace_back(rho, m.w[i]);
        mass += m.w[i];
    }
    if (density_weight.empty())
        throw Error("calibrate_refined_threshold: no tau-truncated mass");
    std::sort(density_weight.begin(), density_weight.end());
    const double drop_target = (1.0 - keep_mass) * mass;
    double cum = 0.0;
    double c = 0.0;
    for (const auto& [rho, w] : density_weight) {
        if (cum + w > drop_target) break;
        cum += w;
        c = rho;
    }
    if (c <= 0.0) {
        // nothing droppable: sit just below the smallest positive density
        for (const auto& [rho, w] : density_weight)
            if (rho > 0.0) return 0.5 * rho;
        throw Error("calibrate_refined_threshold: all densities vanish");
    }
    return c;
}

struct FitDiagnostics {
    double c_used = std::numeric_limits<double>::quiet_NaN();
    bool c_calibrated = false;
    double b_n_used = std::numeric_limits<double>::quiet_NaN();
    double shrink_radius = std::numeric_limits<double>::quiet_NaN();
    int prelim_kept = 0;
    int refined_kept = 0;
    int tau_kept = 0;
    int excluded_empty_neighborhood = 0;
    bool high_exclusion_rate = false;  // more than 5% of kept points excluded
    int guard_activations = 0;
    int nm_evaluations = 0;
    std::vector<double> grid;             // bandwidths tried by the selector
    std::vector<double> grid_criteria;    // criterion per grid value (NaN = skipped)
    int grid_skipped = 0;
};

// Final fit: refined trimming frozen at beta_prelim, optimization over the
// shrinking box around it, plus the plug-in Omega estimate.
struct IndexFit {
    IndexParams beta_prelim;
    IndexParams beta_hat;
    double h_selected = 0.0;
    double criterion_value = std::numeric_limits<double>::infinity();
    double trim_kept_fraction = 0.0;
    Eigen::MatrixXd omega_hat;
    std::optional<Eigen::MatrixXd> cov_boot;
    double tau = 0.0;
    FitDiagnostics diagnostics;
};

// Plug-in estimate of Omega: the averaged outer product of the link
// gradient over trimmed, tau-kept support points, with averaging weight
// 1/n. Censored observations cannot reveal 1{Y <= tau}, so the observable
// surrogate delta * 1{T <= tau} is used: only support points enter.
inline Eigen::MatrixXd estimate_omega(const WeightedMeasure& m,
                                      const IndexParams& beta_hat, double h,
                                      double tau, const TrimmingSpec& trim,
                                      KernelSpec kernel,
                                      int* skipped_out = nullptr) {
    if (beta_hat.dim() != m.dim())
        throw DimensionMismatch("estimate_omega: beta dimension mismatch");
    const int nfree = beta_hat.dim() - 1;
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(nfree, nfree);
    const Eigen::VectorXd b = beta_hat.full();
    const Eigen::VectorXd bref =
        trim.mode == TrimmingMode::RefinedDensity ? trim.beta_ref.full() : b;
    int skipped = 0;
    for (int i = 0; i < m.size(); ++i) {
        if (m.y[i] > tau) continue;
        const Eigen::VectorXd xi = m.x.row(i).transpose();
        bool keep = false;
        if (trim.mode == TrimmingMode::PreliminaryBox) {
            keep = detail::in_box(m.x.row(i), trim.box_lower, trim.box_upper);
        } else {
            keep = trimming_density(m, trim.beta_ref, xi.dot(bref), trim.b_n,
                                    tau, kernel) > trim.c;
        }
        if (!keep) continue;
        try {
            const Eigen::VectorXd g = link_gradient(m, beta_hat, xi, h, tau, kernel);
            omega.noalias() += g * g.transpose();
        } catch (const EmptyNeighborhood&) {
            ++skipped;
        }
    }
    if (skipped_out) *skipped_out = skipped;
    return omega / static_cast<double>(m.sample_size);
}

inline IndexFit fit_final(const WeightedMeasure& m, const IndexParams& beta_prelim,
                          double h, double tau, double c, double b_n,
                          KernelSpec kernel, double shrink_radius,
                          const NelderMeadOptions& nm_opts = {}) {
    if (!(shrink_radius > 0.0))
        throw Error("fit_final: shrink_radius must be positive");
    if (beta_prelim.dim() != m.dim())
        throw DimensionMismatch("fit_final: beta dimension mismatch");
    const int nfree = m.dim() - 1;

    IndexFit fit;
    fit.beta_prelim = beta_prelim;
    fit.h_selected = h;
    fit.tau = tau;
    fit.diagnostics.b_n_used = b_n;
    fit.diagnostics.shrink_radius = shrink_radius;
    fit.diagnostics.guard_activations = m.guard_activations;

    double c_use = c;
    if (!(c_use > 0.0) || std::isnan(c_use)) {
        c_use = calibrate_refined_threshold(m, beta_prelim, b_n, tau, kernel);
        fit.diagnostics.c_calibrated = true;
    }
    fit.diagnostics.c_used = c_use;

    const TrimmingSpec trim = TrimmingSpec::refined_density(c_use, b_n, beta_prelim);
    detail::CriterionContext ctx(m, h, tau, trim, kernel);
    fit.diagnostics.refined_kept = ctx.kept();
    fit.diagnostics.tau_kept = ctx.tau_kept();
    fit.trim_kept_fraction =
        ctx.tau_kept() > 0
            ? static_cast<double>(ctx.kept()) / static_cast<double>(ctx.tau_kept())
            : 0.0;

    if (nfree == 0) {
        fit.beta_hat = beta_prelim;
        CriterionDiagnostics cd;
        fit.criterion_value = ctx.value(fit.beta_hat.full(), &cd);
        fit.diagnostics.excluded_empty_neighborhood = cd.excluded_empty_neighborhood;
        fit.omega_hat = Eigen::MatrixXd::Zero(0, 0);
        return fit;
    }

    auto objective = [&](const Eigen::VectorXd& free) {
        Eigen::VectorXd beta(nfree + 1);
        beta[0] = 1.0;
        beta.tail(nfree) = free;
        return ctx.value(beta);
    };
    const Eigen::VectorXd lower = beta_prelim.free.array() - shrink_radius;
    const Eigen::VectorXd upper = beta_prelim.free.array() + shrink_radius;
    NelderMeadOptions opts = nm_opts;
    opts.initial_step = std::min(opts.initial_step, 0.5 * shrink_radius);
    auto r = nelder_mead(objective, beta_prelim.free, opts, &lower, &upper);

    fit.beta_hat = IndexParams{r.x};
    fit.diagnostics.nm_evaluations = r.evaluations;
    CriterionDiagnostics cd;
    fit.criterion_value = ctx.value(fit.beta_hat.full(), &cd);
    fit.diagnostics.excluded_empty_neighborhood = cd.excluded_empty_neighborhood;
    fit.diagnostics.high_exclusion_rate =
        cd.excluded_empty_neighborhood * 20 > ctx.kept();
    fit.omega_hat = estimate_omega(m, fit.beta_hat, h, tau, trim, kernel);
    return fit;
}

// Measure-level fitting configuration shared by the bandwidth selector and
// the data-level pipeline.
struct IndexFitConfig {
    KernelSpec kernel_reg = quartic_kernel();
    double c = std::numeric_limits<double>::quiet_NaN();    // NaN: calibrate
    double b_n = std::numeric_limits<double>::quiet_NaN();  // NaN: equal to h
    double shrink_kappa = 1.0;
    double param_bound = 1.0;  // compact search box for the free coordinates
    double start_scale = 1.0;  // spread of the multi-start perturbations
    int n_starts = 5;
    std::uint64_t seed = 0;
    double box_q_low = 0.05;
    double box_q_high = 0.95;
    NelderMeadOptions nm_prelim{};
    NelderMeadOptions nm_final{};
};

// Runs the full preliminary+final pipeline for every bandwidth in the grid
// and returns the bandwidth with the smallest fitted criterion (ties go to
// the smaller bandwidth). Grid values failing with IllConditionedTrim are
// skipped and recorded. If best_out is non-null it receives the winning fit.
inline double select_bandwidth(const WeightedMeasure& m,
                               const IndexFitConfig& cfg,
                               const std::vector<double>& grid_in, double tau,
                               IndexFit* best_out = nullptr) {
    if (grid_in.empty()) throw Error("select_bandwidth: empty grid");
    std::vector<double> grid = grid_in;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (double h : grid)
        if (!(h > 0.0)) throw Error("select_bandwidth: bandwidths must be positive");

    const TrimmingSpec box =
        preliminary_box_from_support(m, cfg.box_q_low, cfg.box_q_high);
    const auto starts =
        default_starts(m.dim() - 1, cfg.n_starts, cfg.seed, cfg.start_scale);
    const double shrink_radius =
        cfg.shrink_kappa * std::pow(static_cast<double>(m.sample_size), -0.25);

    IndexFit best;
    bool have_best = false;
    FitDiagnostics grid_diag;
    for (double h : grid) {
        grid_diag.grid.push_back(h);
        try {
            const IndexParams prelim =
                fit_preliminary(m, h, tau, box, cfg.kernel_reg, starts,
                                cfg.nm_prelim, nullptr, cfg.param_bound);
            const double b_n = std::isnan(cfg.b_n) ? h : cfg.b_n;
            IndexFit fit = fit_final(m, prelim, h, tau, cfg.c, b_n, cfg.kernel_reg,
                                     shrink_radius, cfg.nm_final);
            grid_diag.grid_criteria.push_back(fit.criterion_value);
            if (!have_best || fit.criterion_value < best.criterion_value) {
                detail::CriterionContext prelim_ctx(m, h, tau, box, cfg.kernel_reg);
                fit.diagnostics.prelim_kept = prelim_ctx.kept();
                best = std::move(fit);
                have_best = true;
            }
        } catch (const IllConditionedTrim&) {
            grid_diag.grid_criteria.push_back(
                std::numeric_limits<double>::quiet_NaN());
            ++grid_diag.grid_skipped;
        }
    }
    if (!have_best)
        throw IllConditionedTrim(
            "select_bandwidth: every grid value failed the trimming precondition");
    best.diagnostics.grid = grid_diag.grid;
    best.diagnostics.grid_criteria = grid_diag.grid_criteria;
    best.diagnostics.grid_skipped = grid_diag.grid_skipped;
    const double h_selected = best.h_selected;
    if (best_out) *best_out = std::move(best);
    return h_selected;
}

}  // namespace cindex
