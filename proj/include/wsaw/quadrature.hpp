#pragma once

// Quadrature grids on [0, s_max] used to discretize L^2[0, inf).

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wsaw/error.hpp"

namespace wsaw {

enum class QuadRule { CompositeGaussLegendre, Trapezoid };

inline std::string_view to_string(QuadRule rule) {
    return rule == QuadRule::Trapezoid ? "trapezoid" : "gauss-legendre";
}

inline QuadRule parse_quad_rule(std::string_view name) {
    if (name == "gauss-legendre" || name == "gauss") return QuadRule::CompositeGaussLegendre;
    if (name == "trapezoid") return QuadRule::Trapezoid;
    throw ConfigError("unknown quadrature rule '" + std::string(name) + "'");
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    if (n < 1) throw DomainError("gauss_legendre: need at least one node");
    std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute derivative at the converged root
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        const double weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[static_cast<std::size_t>(i)] = -z;
        x[static_cast<std::size_t>(n - 1 - i)] = z;
        w[static_cast<std::size_t>(i)] = weight;
        w[static_cast<std::size_t>(n - 1 - i)] = weight;
    }
    if (n % 2 == 1) x[static_cast<std::size_t>(n / 2)] = 0.0;
    return {std::move(x), std::move(w)};
}

/// Nodes and weights of a composite rule on [0, s_max].
///
/// Gauss grids are open (t = 0 is never a node); trapezoid grids include both
/// endpoints, so their first node is exactly 0.
struct QuadGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    double s_max = 0.0;
    QuadRule rule = QuadRule::CompositeGaussLegendre;
    int n_panels = 0;
    int nodes_per_panel = 0;

    std::size_t size() const { return nodes.size(); }

    double panel_width() const { return s_max / n_panels; }

    /// Index range [first, size()) of the nodes lying in the last panel.
    std::size_t last_panel_begin() const {
        if (rule == QuadRule::Trapezoid) return size() - 1;
        return size() - static_cast<std::size_t>(nodes_per_panel);
    }
};

/// Grid parameters as they appear in configuration files.
struct GridSpec {
    double s_max = 100.0;
    int n_panels = 100;
    int nodes_per_panel = 10;
    QuadRule rule = QuadRule::CompositeGaussLegendre;

    /// Composite 10-point Gauss-Legendre, 100 unit panels on [0, 100].
    static GridSpec default_preset() { return {}; }

    /// Trapezoid rule with step 0.001 on [0, 100].
    static GridSpec fine_trapezoid_preset() { return {100.0, 100000, 1, QuadRule::Trapezoid}; }

    GridSpec refined() const {
        GridSpec out = *this;
        if (rule == QuadRule::Trapezoid) out.n_panels *= 2;
        else out.nodes_per_panel *= 2;
        return out;
    }

    /// Same panel width on a longer interval.
    GridSpec extended(double factor) const {
        GridSpec out = *this;
        const double width = s_max / n_panels;
        out.s_max = s_max * factor;
        out.n_panels = static_cast<int>(std::ceil(out.s_max / width - 1e-9));
        out.s_max = out.n_panels * width;
        return out;
    }

    bool operator==(const GridSpec& other) const = default;
};

inline QuadGrid build_grid(double s_max, int n_panels, int nodes_per_panel, QuadRule rule) {
    if (!(s_max > 0.0) || !std::isfinite(s_max)) throw DomainError("build_grid: s_max must be positive");
    if (n_panels < 1) throw DomainError("build_grid: n_panels must be >= 1");
    if (rule == QuadRule::CompositeGaussLegendre && nodes_per_panel < 1)
        throw DomainError("build_grid: nodes_per_panel must be >= 1");

    QuadGrid grid;
    grid.s_max = s_max;
    grid.rule = rule;
    grid.n_panels = n_panels;
    const double h = s_max / n_panels;

    if (rule == QuadRule::Trapezoid) {
        grid.nodes_per_panel = 1;
        const auto n = static_cast<std::size_t>(n_panels) + 1;
        grid.nodes.resize(n);
        grid.weights.assign(n, h);
        for (std::size_t i = 0; i < n; ++i) grid.nodes[i] = (i + 1 == n) ? s_max : static_cast<double>(i) * h;
        grid.weights.front() = 0.5 * h;
        grid.weights.back() = 0.5 * h;
        return grid;
    }

    grid.nodes_per_panel = nodes_per_panel;
    const auto [x, w] = gauss_legendre(nodes_per_panel);
    grid.nodes.reserve(static_cast<std::size_t>(n_panels) * x.size());
    grid.weights.reserve(grid.nodes.capacity());
    for (int p = 0; p < n_panels; ++p) {
        const double mid = (p + 0.5) * h;
        for (std::size_t k = 0; k < x.size(); ++k) {
            grid.nodes.push_back(mid + 0.5 * h * x[k]);
            grid.weights.push_back(0.5 * h * w[k]);
        }
    }
    return grid;
}

inline QuadGrid build_grid(const GridSpec& spec) {
    return build_grid(spec.s_max, spec.n_panels, spec.nodes_per_panel, spec.rule);
}

/// Trapezoid grid with a given step, e.g. trapezoid_grid(100, 0.001).
inline QuadGrid trapezoid_grid(double s_max, double step) {
    if (!(step > 0.0)) throw DomainError("trapezoid_grid: step must be positive");
    const int panels = static_cast<int>(std::llround(s_max / step));
    return build_grid(s_max, panels, 1, QuadRule::Trapezoid);
}

}  // namespace wsaw
