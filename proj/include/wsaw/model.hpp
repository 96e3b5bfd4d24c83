#pragma once

// Interaction function phi and the weight p(t) = exp(-g phi(t) - nu t).

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "wsaw/error.hpp"

namespace wsaw {

/// Polynomial interaction phi(t) = sum_k a_k t^k.
///
/// The validated constructor only admits powers k >= 2 with a_k >= 0 and a
/// positive leading coefficient, which is enough for phi(0) = 0, phi(t)/t
/// nondecreasing and superlinear growth. `unvalidated` exists for null tests
/// that deliberately use an inadmissible phi (e.g. a linear one).
class PhiSpec {
public:
    using Term = std::pair<int, double>;  // (power, coefficient)

    /// phi(t) = t^2.
    PhiSpec() : coeffs_{0.0, 0.0, 1.0} {}

    explicit PhiSpec(const std::vector<Term>& terms) {
        if (terms.empty()) throw DomainError("phi: at least one (power, coefficient) term is required");
        assign(terms);
        for (const auto& [power, coeff] : terms) {
            if (power < 2) throw DomainError("phi: powers must be integers >= 2, got " + std::to_string(power));
            if (!(coeff >= 0.0) || !std::isfinite(coeff))
                throw DomainError("phi: coefficients must be finite and nonnegative");
        }
        if (!(coeffs_.back() > 0.0)) throw DomainError("phi: leading coefficient must be positive");
    }

    static PhiSpec quadratic(double a = 1.0) { return PhiSpec({{2, a}}); }

    /// Skips every admissibility check. Only for numerical null tests.
    static PhiSpec unvalidated(const std::vector<Term>& terms) {
        PhiSpec phi;
        phi.assign(terms);
        return phi;
    }

    double operator()(double t) const {
        double acc = 0.0;
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * t + *it;
        return acc;
    }

    double derivative(double t) const {
        double acc = 0.0;
        for (std::size_t k = coeffs_.size() - 1; k >= 1; --k) {
            acc = acc * t + static_cast<double>(k) * coeffs_[k];
        }
        return acc;
    }

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

    /// Nonzero terms in ascending power order.
    std::vector<Term> terms() const {
        std::vector<Term> out;
        for (std::size_t k = 0; k < coeffs_.size(); ++k)
            if (coeffs_[k] != 0.0) out.emplace_back(static_cast<int>(k), coeffs_[k]);
        return out;
    }

    /// Coefficient of t^k (zero when absent).
    double coefficient(int k) const {
        return (k >= 0 && static_cast<std::size_t>(k) < coeffs_.size()) ? coeffs_[k] : 0.0;
    }

    bool operator==(const PhiSpec& other) const = default;

private:
    void assign(const std::vector<Term>& terms) {
        int max_power = 0;
        for (const auto& term : terms) {
            if (term.first < 0) throw DomainError("phi: negative power");
            max_power = std::max(max_power, term.first);
        }
        coeffs_.assign(static_cast<std::size_t>(max_power) + 1, 0.0);
        for (const auto& [power, coeff] : terms) coeffs_[power] += coeff;
        while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
    }

    std::vector<double> coeffs_;  // index = power
};

/// Repelling strength g, Laplace variable nu and interaction phi.
///
/// Plain aggregate so that test oracles can use g = 0 (free walk); `make`
/// enforces the model domain g > 0.
struct ModelParams {
    double g = 1.0;
    double nu = 0.0;
    PhiSpec phi{};

    static ModelParams make(double g, double nu, PhiSpec phi = {}) {
        if (!(g > 0.0) || !std::isfinite(g)) throw DomainError("repelling strength g must be positive and finite");
        if (!std::isfinite(nu)) throw DomainError("nu must be finite");
        return ModelParams{g, nu, std::move(phi)};
    }

    ModelParams with_nu(double new_nu) const { return ModelParams{g, new_nu, phi}; }
    ModelParams with_g(double new_g) const { return ModelParams{new_g, nu, phi}; }

    bool operator==(const ModelParams& other) const = default;
};

inline void require_time(double t) {
    if (std::isnan(t)) throw DomainError("time argument is NaN");
    if (t < 0.0) throw DomainError("time argument must be nonnegative");
}

inline double phi_eval(const PhiSpec& phi, double t) {
    require_time(t);
    return phi(t);
}

inline double phi_prime(const PhiSpec& phi, double t) {
    require_time(t);
    return phi.derivative(t);
}

/// log sqrt(p(t)) = -(g phi(t) + nu t) / 2. Every exponential weight in the
/// library goes through this function.
inline double log_sqrt_p(const ModelParams& params, double t) {
    return -0.5 * (params.g * params.phi(t) + params.nu * t);
}

inline double sqrt_p(const ModelParams& params, double t) {
    require_time(t);
    const double lw = log_sqrt_p(params, t);
    if (lw > std::log(std::numeric_limits<double>::max()))
        throw NumericalError("sqrt_p overflows double range at t = " + std::to_string(t));
    return std::exp(lw);
}

}  // namespace wsaw
