#pragma once

// Integral kernels of the transfer operators on L^2[0, inf).
//
//   k0(t, s) = sqrt(p(t)) sqrt(p(s)) e^{-t-s} I0(2 sqrt(st))
//   k1(t, s) sqrt(t/s), the kernel of the linear part of the affine map T
//
// plus the first and second (g, nu)-derivatives of k0. Everything is
// evaluated through e^{-t-s} I0(2 sqrt(st)) = e^{-(sqrt t - sqrt s)^2} [e^{-x} I0(x)]
// at x = 2 sqrt(st), so nothing overflows for large t, s.

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

#include "wsaw/bessel.hpp"
#include "wsaw/error.hpp"
#include "wsaw/model.hpp"

namespace wsaw {

enum class KernelKind {
    K0,          ///< k0, the kernel of Q
    K1Weighted,  ///< k1(t,s) sqrt(t/s), regular at s = 0; not symmetric
    DNuK0,       ///< -(t+s)/2 * k0
    DGK0,        ///< -(phi(t)+phi(s))/2 * k0
    D2NuK0,      ///< (t+s)^2/4 * k0
    DNuDGK0,     ///< (t+s)(phi(t)+phi(s))/4 * k0
    D2GK0,       ///< (phi(t)+phi(s))^2/4 * k0
};

inline constexpr std::array<KernelKind, 7> kAllKernelKinds{
    KernelKind::K0,     KernelKind::K1Weighted, KernelKind::DNuK0,  KernelKind::DGK0,
    KernelKind::D2NuK0, KernelKind::DNuDGK0,    KernelKind::D2GK0,
};

inline constexpr std::string_view to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::K0: return "K0";
        case KernelKind::K1Weighted: return "K1Weighted";
        case KernelKind::DNuK0: return "DNuK0";
        case KernelKind::DGK0: return "DGK0";
        case KernelKind::D2NuK0: return "D2NuK0";
        case KernelKind::DNuDGK0: return "DNuDGK0";
        case KernelKind::D2GK0: return "D2GK0";
    }
    return "?";
}

inline constexpr bool is_symmetric(KernelKind kind) { return kind != KernelKind::K1Weighted; }

/// Polynomial prefactor multiplying k0 for the derivative kinds; 1 for K0.
inline double derivative_factor(KernelKind kind, double t, double s, double phi_t, double phi_s) {
    const double a = t + s;
    const double b = phi_t + phi_s;
    switch (kind) {
        case KernelKind::K0: return 1.0;
        case KernelKind::DNuK0: return -0.5 * a;
        case KernelKind::DGK0: return -0.5 * b;
        case KernelKind::D2NuK0: return 0.25 * a * a;
        case KernelKind::DNuDGK0: return 0.25 * a * b;
        case KernelKind::D2GK0: return 0.25 * b * b;
        case KernelKind::K1Weighted: break;
    }
    throw DomainError("derivative_factor: K1Weighted has no k0 prefactor");
}

namespace detail {

inline constexpr double kK1SeriesCutoff = 1e-8;

/// Sum_{m>=0} s^m t^{m+1} / (m! (m+1)!), the power series of I1(2 sqrt(st)) sqrt(t/s).
/// Used for tiny s where the closed form is 0 * inf.
inline double k1_weighted_series(double t, double s) {
    const double st = s * t;
    double term = t;
    double sum = term;
    for (int m = 1; m < 200 && term > 1e-18 * sum; ++m) {
        term *= st / (static_cast<double>(m) * static_cast<double>(m + 1));
        sum += term;
    }
    return sum;
}

inline double k0_unweighted_log_prefactor(double t, double s) {
    const double d = std::sqrt(t) - std::sqrt(s);
    return -d * d;
}

}  // namespace detail

/// Evaluates one of the kernels at (t, s). Symmetric kinds sort the
/// arguments first so that kernel(t, s) == kernel(s, t) bit for bit.
inline double kernel_eval(KernelKind kind, const ModelParams& params, double t, double s) {
    if (std::isnan(t) || std::isnan(s)) throw DomainError("kernel_eval: NaN argument");
    if (t < 0.0 || s < 0.0) throw DomainError("kernel_eval: arguments must be nonnegative");

    if (kind == KernelKind::K1Weighted) {
        if (t == 0.0) return 0.0;
        const double lw = log_sqrt_p(params, t) + log_sqrt_p(params, s);
        if (s < detail::kK1SeriesCutoff) {
            return std::exp(lw - t - s) * detail::k1_weighted_series(t, s);
        }
        const double x = 2.0 * std::sqrt(s * t);
        return std::exp(lw + detail::k0_unweighted_log_prefactor(t, s)) * bessel_i1_scaled(x) *
               std::sqrt(t / s);
    }

    if (s < t) std::swap(t, s);
    const double lw =
        log_sqrt_p(params, t) + log_sqrt_p(params, s) + detail::k0_unweighted_log_prefactor(t, s);
    const double k0 = std::exp(lw) * bessel_i0_scaled(2.0 * std::sqrt(s * t));
    if (kind == KernelKind::K0) return k0;
    return derivative_factor(kind, t, s, params.phi(t), params.phi(s)) * k0;
}

}  // namespace wsaw
