#pragma once

// Exponentially scaled modified Bessel functions e^{-x} I0(x), e^{-x} I1(x).
//
// Raw I0 overflows near x = 713 while the kernels need arguments up to
// 2 * s_max. Power series below the switch point (all terms positive, no
// cancellation), Hankel asymptotic expansion above it.

#include <cmath>
#include <numbers>

#include "wsaw/error.hpp"

namespace wsaw {

namespace detail {

inline constexpr double kBesselSwitch = 20.0;

inline double bessel_scaled_series(int order, double x) {
    const double q = 0.25 * x * x;
    double term = (order == 0) ? 1.0 : 0.5 * x;
    double sum = term;
    for (int m = 1; m < 500; ++m) {
        term *= q / (static_cast<double>(m) * static_cast<double>(m + order));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum * std::exp(-x);
}

inline double bessel_scaled_asymptotic(int order, double x) {
    const double mu = 4.0 * order * order;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        const double next = -term * (mu - odd * odd) / (8.0 * k * x);
        if (std::abs(next) >= std::abs(term)) break;  // asymptotic series started diverging
        term = next;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

inline void require_bessel_arg(double x) {
    if (std::isnan(x)) throw DomainError("Bessel argument is NaN");
    if (x < 0.0) throw DomainError("Bessel argument must be nonnegative");
}

}  // namespace detail

/// e^{-x} I0(x) for x >= 0; in (0, 1], equals 1 at the origin.
inline double bessel_i0_scaled(double x) {
    detail::require_bessel_arg(x);
    if (x == 0.0) return 1.0;
    return x <= detail::kBesselSwitch ? detail::bessel_scaled_series(0, x)
                                      : detail::bessel_scaled_asymptotic(0, x);
}

/// e^{-x} I1(x) for x >= 0; zero at the origin.
inline double bessel_i1_scaled(double x) {
    detail::require_bessel_arg(x);
    if (x == 0.0) return 0.0;
    return x <= detail::kBesselSwitch ? detail::bessel_scaled_series(1, x)
                                      : detail::bessel_scaled_asymptotic(1, x);
}

/// log I0(x), finite for every x >= 0.
inline double log_bessel_i0(double x) { return x + std::log(bessel_i0_scaled(x)); }

}  // namespace wsaw
