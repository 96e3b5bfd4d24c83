#pragma once

// Critical point nu_c(g), where the leading eigenvalue of Q equals 1, and the
// escape speed theta(g) = -1 / (d lambda / d nu) there.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wsaw/discretize.hpp"
#include "wsaw/error.hpp"
#include "wsaw/greenfn.hpp"
#include "wsaw/spectral.hpp"

namespace wsaw {

struct CriticalOptions {
    GridSpec grid = GridSpec::default_preset();
    Representation representation = Representation::Auto;
    double tol = 1e-12;  ///< on |lambda - 1|
    double nu_lo = -50.0;
    double nu_hi = 5.0;
    int max_iterations = 200;
    bool auto_extend = true;
    double tail_tol = 1e-10;  ///< eigenvector norm on the last panel, relative
    int max_extensions = 6;
    EigenOptions eigen{};
    FixedPointOptions fixed_point{};
};

/// Leading eigenpair plus first derivatives at one (g, nu).
struct Evaluation {
    ModelParams params;
    std::shared_ptr<const QuadGrid> grid;
    std::optional<DiscretizedOperator> Q;
    SpectralResult spec;
    bool overflow = false;  ///< weights exceed double range; lambda is astronomically large
};

namespace detail {

/// True when sqrt(w) sqrt(p) overflows somewhere on the grid. The diagonal
/// of Q then exceeds any reasonable bound, so lambda > 1.
inline bool weights_overflow(const ModelParams& params, const QuadGrid& grid) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i)
        worst = std::max(worst, std::log(grid.weights[i]) + 2.0 * log_sqrt_p(params, grid.nodes[i]) - 0.0);
    return worst > 600.0;
}

inline double tail_fraction(const Vector& h, const QuadGrid& grid) {
    const auto first = static_cast<Eigen::Index>(grid.last_panel_begin());
    return h.tail(h.size() - first).norm() / h.norm();
}

}  // namespace detail

inline Evaluation evaluate(const ModelParams& params, std::shared_ptr<const QuadGrid> grid,
                           Representation rep = Representation::Auto, const EigenOptions& eig = {}) {
    Evaluation ev;
    ev.params = params;
    ev.grid = grid;
    if (detail::weights_overflow(params, *grid)) {
        ev.overflow = true;
        ev.spec.lambda = std::numeric_limits<double>::infinity();
        return ev;
    }
    ev.Q.emplace(assemble(KernelKind::K0, params, grid, rep));
    ev.spec = leading_eigenpair(*ev.Q, eig);
    fill_first_derivs(*ev.Q, ev.spec);
    return ev;
}

/// Leading eigenvalue of the discretized Q at (g, nu).
inline double lambda_at(const ModelParams& params, const QuadGrid& grid,
                        Representation rep = Representation::Auto) {
    return evaluate(params, std::make_shared<const QuadGrid>(grid), rep).spec.lambda;
}

struct CriticalPoint {
    double g = 0.0;
    double nu_c = 0.0;
    double lambda = 0.0;
    double theta = 0.0;
    double u_bar = 0.0;
    double dlambda_dnu_at_nuc = 0.0;
    double dlambda_dg_at_nuc = 0.0;
    double gap = 0.0;
    double lambda2 = 0.0;
    int newton_iterations = 0;
    int extensions = 0;
    double tail_fraction = 0.0;
    GridSpec grid_spec;
    std::size_t n_nodes = 0;
};

/// Critical point together with the operator and eigenpair at nu_c, for
/// callers that keep computing there.
struct CriticalState {
    CriticalPoint point;
    Evaluation eval;
};

namespace detail {

inline CriticalState solve_on_grid(double g, const PhiSpec& phi, const GridSpec& spec, double nu_start,
                                   const CriticalOptions& opts) {
    auto grid = std::make_shared<const QuadGrid>(build_grid(spec));
    double lo = opts.nu_lo, hi = opts.nu_hi;
    bool lo_seen = false, hi_seen = false;
    double nu = std::clamp(nu_start, lo, hi);

    for (int it = 1; it <= opts.max_iterations; ++it) {
        Evaluation ev = evaluate(ModelParams{g, nu, phi}, grid, opts.representation, opts.eigen);
        double next = 0.0;
        if (ev.overflow) {
            lo = nu;
            lo_seen = true;
            next = 0.5 * (lo + hi);
        } else {
            const double f = ev.spec.lambda - 1.0;
            if (std::abs(f) <= opts.tol) {
                CriticalState st;
                st.point.g = g;
                st.point.nu_c = nu;
                st.point.lambda = ev.spec.lambda;
                st.point.newton_iterations = it;
                st.eval = std::move(ev);
                return st;
            }
            if (f > 0.0) {
                lo = nu;
                lo_seen = true;
            } else {
                hi = nu;
                hi_seen = true;
            }
            const double newton = nu - f / ev.spec.dlambda_dnu;
            next = (std::isfinite(newton) && newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
        }
        if (hi - lo <= 1e-15 * std::max(1.0, std::abs(nu))) break;
        if (next == nu) break;
        nu = next;
    }
    if (!lo_seen || !hi_seen)
        throw NumericalError("no sign change of lambda - 1 in nu in [" + std::to_string(opts.nu_lo) + ", " +
                             std::to_string(opts.nu_hi) + "] at g = " + std::to_string(g));
    throw NumericalError("critical point iteration did not reach |lambda - 1| <= tol at g = " + std::to_string(g));
}

}  // namespace detail

/// Safeguarded Newton for lambda(g, nu) = 1, with automatic extension of
/// s_max when the eigenvector has not decayed on the last panel.
inline CriticalState find_critical_state(double g, const PhiSpec& phi = {}, const CriticalOptions& opts = {},
                                         double nu_start = 0.0) {
    if (!(g > 0.0) || !std::isfinite(g)) throw DomainError("g must be positive and finite");
    if (!(opts.tol >= 1e-15)) throw DomainError("tolerance too small");
    GridSpec spec = opts.grid;
    double nu = nu_start;
    for (int ext = 0;; ++ext) {
        CriticalState st = detail::solve_on_grid(g, phi, spec, nu, opts);
        const double tail = detail::tail_fraction(st.eval.spec.h, *st.eval.grid);
        st.point.tail_fraction = tail;
        st.point.extensions = ext;
        st.point.grid_spec = spec;
        st.point.n_nodes = st.eval.grid->size();
        if (!opts.auto_extend || tail <= opts.tail_tol || ext >= opts.max_extensions) {
            const SpectralResult& sr = st.eval.spec;
            st.point.dlambda_dnu_at_nuc = sr.dlambda_dnu;
            st.point.dlambda_dg_at_nuc = sr.dlambda_dg;
            st.point.theta = -1.0 / sr.dlambda_dnu;
            st.point.gap = sr.gap;
            st.point.lambda2 = sr.lambda2;
            return st;
        }
        nu = st.point.nu_c;
        spec = spec.extended(1.5);
    }
}

inline CriticalPoint find_nu_c(double g, const PhiSpec& phi = {}, const CriticalOptions& opts = {},
                               double nu_start = 0.0) {
    return find_critical_state(g, phi, opts, nu_start).point;
}

/// u_bar = <q, h>^2 at nu_c.
inline double u_bar_at(const CriticalState& st, const CriticalOptions& opts = {}) {
    const FixedPoint fp = fixed_point_q(st.eval.params, st.eval.grid, opts.representation, opts.fixed_point);
    const double c = fp.q.dot(st.eval.spec.h);
    return c * c;
}

/// theta(g) and u_bar(g) at the critical point.
inline CriticalState speed_state(double g, const PhiSpec& phi = {}, const CriticalOptions& opts = {},
                                 double nu_start = 0.0) {
    CriticalState st = find_critical_state(g, phi, opts, nu_start);
    st.point.u_bar = u_bar_at(st, opts);
    return st;
}

inline CriticalPoint speed(double g, const PhiSpec& phi = {}, const CriticalOptions& opts = {},
                           double nu_start = 0.0) {
    return speed_state(g, phi, opts, nu_start).point;
}

struct SweepRow {
    double g = 0.0;
    std::optional<CriticalPoint> point;
    std::string error;
};

/// speed() over a list of g, warm-starting each Newton solve from the
/// previous nu_c. Failures are recorded per row and the sweep continues.
inline std::vector<SweepRow> sweep(const std::vector<double>& g_values, const PhiSpec& phi = {},
                                   const CriticalOptions& opts = {}) {
    std::vector<SweepRow> rows;
    rows.reserve(g_values.size());
    double nu_start = 0.0;
    for (double g : g_values) {
        SweepRow row;
        row.g = g;
        try {
            row.point = speed(g, phi, opts, nu_start);
            nu_start = row.point->nu_c;
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Geometric grid of n values from lo to hi inclusive.
inline std::vector<double> log_spaced(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw DomainError("log_spaced: need 0 < lo <= hi and n >= 1");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        out[static_cast<std::size_t>(k)] =
            n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (n - 1));
    out.back() = hi;
    return out;
}

}  // namespace wsaw
