#pragma once

// Sign certificate for theta'(g): the c_n sequence, L[lambda], the H_n
// consistency check and the density-ratio dominance checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "wsaw/bessel.hpp"
#include "wsaw/criticality.hpp"
#include "wsaw/discretize.hpp"
#include "wsaw/error.hpp"
#include "wsaw/spectral.hpp"

namespace wsaw {

struct CnSequence {
    double g = 0.0;
    std::vector<double> c;     ///< c_0..c_N
    int N = 0;
    double tail_bound = 0.0;   ///< bound on sum_{n>N} |c_n|
    double ratio = 0.0;        ///< lambda2 / lambda, the geometric decay rate
    double s_t = 0.0;          ///< sum t h^2
    double s_phi = 0.0;        ///< sum phi h^2
};

/// c_n = <Q^n[t h], phi h> sum(t h^2) - <Q^n[t h], t h> sum(phi h^2), with
/// Q and h taken at the critical point.
///
/// t h is projected off h first. The h-component cancels between the two
/// terms exactly, so this changes nothing but the roundoff floor.
inline CnSequence cn_sequence(const DiscretizedOperator& Q, const SpectralResult& spec, int N) {
    if (N < 1) throw DomainError("cn_sequence: N must be >= 1");
    if (!(spec.gap >= 1e-8 * spec.lambda)) throw NumericalError("spectral gap too small for a tail bound");
    const Vector& h = spec.h;
    const Vector t = node_weights(Q.grid(), Q.params(), Weight::Time);
    const Vector phi = node_weights(Q.grid(), Q.params(), Weight::Phi);
    const Vector th = t.cwiseProduct(h);
    const Vector ph = phi.cwiseProduct(h);

    CnSequence out;
    out.g = Q.params().g;
    out.N = N;
    out.s_t = h.dot(th);
    out.s_phi = h.dot(ph);
    const Vector u = th - out.s_t * h;

    out.c.reserve(static_cast<std::size_t>(N) + 1);
    Vector x = u;
    for (int n = 0; n <= N; ++n) {
        if (n > 0) x = Q.apply(x);
        out.c.push_back(x.dot(ph) * out.s_t - x.dot(u) * out.s_phi);
    }
    // |c_n| <= mu2^n ||u|| (||phi h|| s_t + ||u|| s_phi) since Q is PSD and u is orthogonal to h.
    const double mu2 = std::max(spec.lambda2, 0.0);
    out.ratio = mu2 / spec.lambda;
    const double amp = u.norm() * (ph.norm() * std::abs(out.s_t) + u.norm() * std::abs(out.s_phi));
    out.tail_bound = amp * std::pow(mu2, N + 1) / (1.0 - mu2);
    return out;
}

struct Certificate {
    double L = 0.0;           ///< -c_0 - 2 sum_{n=1}^N c_n
    double tail_bound = 0.0;  ///< bound on the truncation error of L
    bool negative = false;    ///< L + tail_bound < 0
};

inline Certificate L_lambda(const CnSequence& cn) {
    Certificate cert;
    cert.L = -cn.c.front();
    for (std::size_t n = 1; n < cn.c.size(); ++n) cert.L -= 2.0 * cn.c[n];
    cert.tail_bound = 2.0 * cn.tail_bound;
    cert.negative = cert.L + cert.tail_bound < 0.0;
    return cert;
}

/// lambda_{nu g} lambda_nu - lambda_{nu nu} lambda_g from the spectral second derivatives.
inline double L_from_derivatives(const SpectralResult& spec) {
    if (!spec.d2lambda_dnu2 || !spec.d2lambda_dnudg) throw DomainError("second derivatives not filled");
    return *spec.d2lambda_dnudg * spec.dlambda_dnu - *spec.d2lambda_dnu2 * spec.dlambda_dg;
}

/// d theta / dg = -theta^3 L[lambda].
inline double dtheta_dg(double theta, double L) { return -theta * theta * theta * L; }

/// L[H_n] = -(1/n)(-c_0/2 + c_n/2 + sum_{i,j=1}^n c_{|j-i|}).
inline double L_Hn_formula(const std::vector<double>& c, int n) {
    if (n < 1 || static_cast<std::size_t>(n) >= c.size()) throw DomainError("L_Hn_formula: need 1 <= n <= N");
    double s = -0.5 * c[0] + 0.5 * c[static_cast<std::size_t>(n)];
    // sum_{i,j=1}^n c_{|j-i|} = n c_0 + 2 sum_{d=1}^{n-1} (n-d) c_d
    s += n * c[0];
    for (int d = 1; d < n; ++d) s += 2.0 * (n - d) * c[static_cast<std::size_t>(d)];
    return -s / n;
}

/// Same quantity as the symmetric double sum -(1/n) sum_{i,j=0}^n a_i a_j c_{|j-i|},
/// a = (1/2, 1, ..., 1, 1/2).
inline double L_Hn_alpha_sum(const std::vector<double>& c, int n) {
    if (n < 1 || static_cast<std::size_t>(n) >= c.size()) throw DomainError("L_Hn_alpha_sum: need 1 <= n <= N");
    auto alpha = [n](int i) { return (i == 0 || i == n) ? 0.5 : 1.0; };
    double s = 0.0;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) s += alpha(i) * alpha(j) * c[static_cast<std::size_t>(std::abs(j - i))];
    return -s / n;
}

struct HnRow {
    int n = 0;
    double formula = 0.0;
    double finite_difference = 0.0;
    double rel_discrepancy = 0.0;
    double distance_to_L = 0.0;  ///< |L[H_n] - L[lambda]| using the formula value
};

/// L[H_n] from the c-sequence and from central differences of
/// H_n(g, nu) = <Q(g, nu)^n h0, h0>^{1/n} around the critical point.
inline std::vector<HnRow> Hn_consistency(const CriticalState& st, const std::vector<int>& n_list,
                                         double step = 1e-3) {
    const auto& ev = st.eval;
    const SpectralResult& spec = ev.spec;
    int n_max = 1;
    for (int n : n_list) n_max = std::max(n_max, n);
    const CnSequence cn = cn_sequence(*ev.Q, spec, std::max(n_max, 50));
    const double L = L_lambda(cn).L;

    const double g0 = ev.params.g, nu0 = ev.params.nu;
    // H_n at every stencil point for all n at once
    auto powers = [&](double g, double nu) {
        const DiscretizedOperator Q = assemble(KernelKind::K0, ModelParams{g, nu, ev.params.phi}, ev.grid,
                                               ev.Q->representation());
        std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
        Vector x = spec.h;
        for (int n = 1; n <= n_max; ++n) {
            x = Q.apply(x);
            out[static_cast<std::size_t>(n)] = x.dot(spec.h);
        }
        return out;
    };
    const double e = step;
    const auto c00 = powers(g0, nu0);
    const auto cpn = powers(g0, nu0 + e), cmn = powers(g0, nu0 - e);
    const auto cpg = powers(g0 + e, nu0), cmg = powers(g0 - e, nu0);
    const auto cpp = powers(g0 + e, nu0 + e), cpm = powers(g0 + e, nu0 - e);
    const auto cmp = powers(g0 - e, nu0 + e), cmm = powers(g0 - e, nu0 - e);

    std::vector<HnRow> rows;
    for (int n : n_list) {
        const auto k = static_cast<std::size_t>(n);
        auto H = [n, k](const std::vector<double>& v) { return std::pow(v[k], 1.0 / n); };
        const double h_nu = (H(cpn) - H(cmn)) / (2 * e);
        const double h_g = (H(cpg) - H(cmg)) / (2 * e);
        const double h_nunu = (H(cpn) - 2 * H(c00) + H(cmn)) / (e * e);
        const double h_nug = (H(cpp) - H(cpm) - H(cmp) + H(cmm)) / (4 * e * e);
        HnRow row;
        row.n = n;
        row.formula = L_Hn_formula(cn.c, n);
        row.finite_difference = h_nug * h_nu - h_nunu * h_g;
        row.rel_discrepancy = std::abs(row.finite_difference - row.formula) / std::abs(row.formula);
        row.distance_to_L = std::abs(row.formula - L);
        rows.push_back(row);
    }
    return rows;
}

struct DominanceReport {
    int pairs_checked = 0;
    int pair_failures = 0;
    double max_violation = 0.0;  ///< largest decrease seen in log ratios
    bool phi_ratio_monotone = true;
    bool passed() const { return pair_failures == 0 && phi_ratio_monotone; }
};

/// s -> I0(2 sqrt(s y)) / I0(2 sqrt(s x)) nondecreasing for x <= y, checked in
/// log form on random pairs from (0, s_max]; and phi(s)/s nondecreasing.
inline DominanceReport dominance_check(const PhiSpec& phi, double s_max, int pairs, int samples,
                                       std::uint64_t seed = 1, double slack = 1e-12) {
    if (pairs < 1 || samples < 2) throw DomainError("dominance_check: need pairs >= 1 and samples >= 2");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, s_max);
    DominanceReport rep;
    auto grid_point = [&](int k) { return s_max * (k + 1) / samples; };

    for (int p = 0; p < pairs; ++p) {
        double x = uni(rng), y = uni(rng);
        if (x > y) std::swap(x, y);
        double prev = -std::numeric_limits<double>::infinity();
        bool ok = true;
        for (int k = 0; k < samples; ++k) {
            const double s = grid_point(k);
            const double r = log_bessel_i0(2.0 * std::sqrt(s * y)) - log_bessel_i0(2.0 * std::sqrt(s * x));
            const double drop = prev - r;
            if (drop > slack * std::max(1.0, std::abs(r))) {
                ok = false;
                rep.max_violation = std::max(rep.max_violation, drop);
            }
            prev = r;
        }
        ++rep.pairs_checked;
        if (!ok) ++rep.pair_failures;
    }

    double prev = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
        const double s = grid_point(k);
        const double r = phi(s) / s;
        if (prev - r > slack * std::max(1.0, std::abs(r))) rep.phi_ratio_monotone = false;
        prev = r;
    }
    return rep;
}

}  // namespace wsaw
