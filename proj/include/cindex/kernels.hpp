#pragma once

#include <cmath>
#include <string>

#include "cindex/errors.hpp"

namespace cindex {

// Compactly supported kernels on [-1, 1]. Bandwidth scaling is the
// caller's job: evaluate as kernel_eval(spec, (z - z0) / a_n).
enum class KernelFamily {
    Quartic,       // (15/16)(1-u^2)^2, the biweight
    Epanechnikov,  // (3/4)(1-u^2)
    Triweight,     // (35/32)(1-u^2)^3
};

struct KernelSpec {
    KernelFamily family = KernelFamily::Quartic;
};

inline KernelSpec quartic_kernel() { return {KernelFamily::Quartic}; }
inline KernelSpec epanechnikov_kernel() { return {KernelFamily::Epanechnikov}; }
inline KernelSpec triweight_kernel() { return {KernelFamily::Triweight}; }

// Quartic and triweight have continuous bounded second derivatives and are
// admissible as the conditional-distribution smoothing kernel; the
// epanechnikov is offered for the regression smoother only.
inline bool has_continuous_second_derivative(KernelSpec spec) {
    return spec.family != KernelFamily::Epanechnikov;
}

inline double kernel_eval(KernelSpec spec, double u) {
    const double a = 1.0 - u * u;
    if (a <= 0.0) return 0.0;
    switch (spec.family) {
        case KernelFamily::Quartic:
            return 0.9375 * a * a;
        case KernelFamily::Epanechnikov:
            return 0.75 * a;
        case KernelFamily::Triweight:
            return 1.09375 * a * a * a;
    }
    return 0.0;
}

// Analytic derivative of order 1 or 2; zero outside the support. The
// epanechnikov second derivative is the constant -3/2 on (-1, 1) and jumps
// to 0 at the endpoints.
inline double kernel_derivative(KernelSpec spec, double u, int order) {
    if (order != 1 && order != 2) {
        throw UnsupportedOrder("kernel_derivative: order must be 1 or 2, got " +
                               std::to_string(order));
    }
    const double a = 1.0 - u * u;
    if (a <= 0.0) return 0.0;
    switch (spec.family) {
        case KernelFamily::Quartic:
            return order == 1 ? -3.75 * u * a : -3.75 * (1.0 - 3.0 * u * u);
        case KernelFamily::Epanechnikov:
            return order == 1 ? -1.5 * u : -1.5;
        case KernelFamily::Triweight:
            return order == 1 ? -6.5625 * u * a * a
                              : -6.5625 * a * (1.0 - 5.0 * u * u);
    }
    return 0.0;
}

// Compile-time-dispatched evaluation for hot loops.
template <KernelFamily F>
inline double kernel_eval_fixed(double u) {
    const double a = 1.0 - u * u;
    if (a <= 0.0) return 0.0;
    if constexpr (F == KernelFamily::Quartic)
        return 0.9375 * a * a;
    else if constexpr (F == KernelFamily::Epanechnikov)
        return 0.75 * a;
    else
        return 1.09375 * a * a * a;
}

inline std::string kernel_name(KernelSpec spec) {
    switch (spec.family) {
        case KernelFamily::Quartic: return "quartic";
        case KernelFamily::Epanechnikov: return "epanechnikov";
        case KernelFamily::Triweight: return "triweight";
    }
    return "?";
}

inline KernelSpec kernel_from_name(const std::string& name) {
    if (name == "quartic" || name == "biweight") return quartic_kernel();
    if (name == "epanechnikov") return epanechnikov_kernel();
    if (name == "triweight") return triweight_kernel();
    throw SchemaError("unknown kernel family: " + name);
}

}  // namespace cindex
