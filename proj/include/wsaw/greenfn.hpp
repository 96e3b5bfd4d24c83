#pragma once

// Fixed point q of T, two-point functions, susceptibility and moment sums.

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wsaw/discretize.hpp"
#include "wsaw/error.hpp"
#include "wsaw/spectral.hpp"

namespace wsaw {

struct FixedPoint {
    Vector q;
    int iterations = 0;
    double residual = 0.0;
    double contraction_ratio = 0.0;  ///< last ratio of successive increments
    ModelParams params;
};

struct FixedPointOptions {
    double tol = 1e-12;
    int max_iterations = 10000;
    int stall_window = 50;
};

namespace detail {

inline std::string point_label(const ModelParams& p) {
    return "(g=" + std::to_string(p.g) + ", nu=" + std::to_string(p.nu) + ")";
}

}  // namespace detail

/// q = lim T^N[sqrt p], by plain iteration of the affine map.
inline FixedPoint fixed_point_q(const DiscretizedOperator& A, const FixedPointOptions& opts = {}) {
    if (A.kind() != KernelKind::K1Weighted) throw DomainError("fixed_point_q expects a K1Weighted operator");
    const ModelParams& params = A.params();
    const Vector offset = t_offset(params, A.grid());
    Vector f = sqrt_p_vector(params, A.grid());

    FixedPoint fp;
    fp.params = params;
    double prev_inc = std::numeric_limits<double>::infinity();
    int growing = 0;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        Vector next = apply_T(offset, A, f);
        const double inc = (next - f).norm();
        if (!std::isfinite(inc)) throw NumericalError("T iteration diverged at " + detail::point_label(params));
        fp.contraction_ratio = std::isfinite(prev_inc) && prev_inc > 0.0 ? inc / prev_inc : 0.0;
        growing = (std::isfinite(prev_inc) && inc >= prev_inc && inc > opts.tol) ? growing + 1 : 0;
        if (growing >= opts.stall_window)
            throw NumericalError("T is not contracting at " + detail::point_label(params), inc);
        f = std::move(next);
        prev_inc = inc;
        fp.iterations = it;
        if (inc <= opts.tol) break;
    }
    fp.residual = (apply_T(offset, A, f) - f).norm();
    fp.q = std::move(f);
    if (fp.residual > std::max(opts.tol, 1e-10))
        throw NumericalError("T iteration did not converge at " + detail::point_label(params), fp.residual);
    return fp;
}

inline FixedPoint fixed_point_q(const ModelParams& params, std::shared_ptr<const QuadGrid> grid,
                                Representation rep = Representation::Auto, const FixedPointOptions& opts = {}) {
    return fixed_point_q(assemble(KernelKind::K1Weighted, params, std::move(grid), rep), opts);
}

/// G_ij = <Q^{|j-i|} q, q>.
inline double two_point(const DiscretizedOperator& Q, const Vector& q, int i, int j) {
    Q.check_size(q);
    const int d = std::abs(j - i);
    Vector x = q;
    for (int k = 0; k < d; ++k) x = Q.apply(x);
    const double g = x.dot(q);
    if (!std::isfinite(g)) throw NumericalError("two-point function overflowed at |j-i| = " + std::to_string(d));
    return g;
}

/// G_{0j} for j = 0..j_max.
inline std::vector<double> two_point_table(const DiscretizedOperator& Q, const Vector& q, int j_max) {
    Q.check_size(q);
    if (j_max < 0) throw DomainError("two_point_table: j_max must be nonnegative");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(j_max) + 1);
    Vector x = q;
    for (int j = 0; j <= j_max; ++j) {
        if (j > 0) x = Q.apply(x);
        const double g = x.dot(q);
        if (!std::isfinite(g)) throw NumericalError("two-point function overflowed at j = " + std::to_string(j));
        out.push_back(g);
    }
    return out;
}

/// Box [-N, N]: G^N_ij = <Q^{j-i} T^{N+i}[sqrt p], T^{N-j}[sqrt p]>.
inline double finite_volume_two_point(const DiscretizedOperator& Q, const DiscretizedOperator& A, int N, int i,
                                      int j) {
    if (N < 0) throw DomainError("finite_volume_two_point: N must be nonnegative");
    if (i > j) std::swap(i, j);
    if (i < -N || j > N) throw DomainError("finite_volume_two_point: need -N <= i <= j <= N");
    const ModelParams& params = Q.params();
    const Vector offset = t_offset(params, Q.grid());
    const Vector start = sqrt_p_vector(params, Q.grid());
    auto t_power = [&](int k) {
        Vector f = start;
        for (int s = 0; s < k; ++s) f = apply_T(offset, A, f);
        return f;
    };
    Vector left = t_power(N + i);
    const Vector right = t_power(N - j);
    for (int k = 0; k < j - i; ++k) left = Q.apply(left);
    return left.dot(right);
}

/// chi_+ = <Q (1 - Q)^{-1} q, q>. Requires lambda < 1 - 1e-8.
inline double susceptibility_plus(const DiscretizedOperator& Q, const Vector& q, double lambda) {
    if (!(lambda < 1.0 - 1e-8))
        throw CriticalityError("susceptibility requires nu > nu_c (lambda < 1 - 1e-8)", lambda);
    const Resolvent R(Q, 1.0, lambda);
    return Q.apply(R.solve(q)).dot(q);
}

/// Stirling numbers of the second kind S(k, m) for 0 <= m <= k <= 6.
inline constexpr int kMaxMomentOrder = 6;

inline double stirling2(int k, int m) {
    static constexpr std::array<std::array<double, 7>, 7> table = {{
        {1, 0, 0, 0, 0, 0, 0},
        {0, 1, 0, 0, 0, 0, 0},
        {0, 1, 1, 0, 0, 0, 0},
        {0, 1, 3, 1, 0, 0, 0},
        {0, 1, 7, 6, 1, 0, 0},
        {0, 1, 15, 25, 10, 1, 0},
        {0, 1, 31, 90, 65, 15, 1},
    }};
    if (k < 0 || k > kMaxMomentOrder || m < 0 || m > kMaxMomentOrder)
        throw DomainError("stirling2: indices must lie in [0, 6]");
    return table[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)];
}

struct MomentSums {
    double chi_plus = 0.0;
    double g00 = 0.0;
    std::map<int, double> moment;  ///< k -> sum_{j>=1} j^k G_0j
    std::map<int, double> xi;      ///< k -> correlation length of order k
};

/// sum_{j>=1} j^k Q^j = sum_{m=1}^k S(k,m) m! Q^m (1-Q)^{-(m+1)}, via chained solves.
inline MomentSums moment_sums(const DiscretizedOperator& Q, const Vector& q, double lambda, int k_max) {
    if (k_max < 0 || k_max > kMaxMomentOrder) throw DomainError("moment_sums: k_max must lie in [0, 6]");
    if (!(lambda < 1.0 - 1e-8))
        throw CriticalityError("moment sums require nu > nu_c (lambda < 1 - 1e-8)", lambda);
    const Resolvent R(Q, 1.0, lambda);

    MomentSums out;
    Vector r = R.solve(q);  // (1-Q)^{-1} q
    out.chi_plus = Q.apply(r).dot(q);
    out.g00 = q.dot(q);
    out.moment[0] = out.chi_plus;

    // p[m] = <Q^m (1-Q)^{-(m+1)} q, q>
    std::vector<double> p(static_cast<std::size_t>(k_max) + 1, 0.0);
    for (int m = 1; m <= k_max; ++m) {
        r = Q.apply(R.solve(r));
        p[static_cast<std::size_t>(m)] = r.dot(q);
    }
    const double chi = 2.0 * out.chi_plus + out.g00;
    double factorial = 1.0;
    for (int k = 1; k <= k_max; ++k) {
        double sum = 0.0;
        factorial = 1.0;
        for (int m = 1; m <= k; ++m) {
            factorial *= m;
            sum += stirling2(k, m) * factorial * p[static_cast<std::size_t>(m)];
        }
        out.moment[k] = sum;
        out.xi[k] = std::pow(2.0 * sum / chi, 1.0 / k);
    }
    return out;
}

struct PowerLawFit {
    double exponent = 0.0;
    double amplitude = 0.0;
    double r2 = 0.0;
};

/// Least-squares fit of log y = log A + b log x.
inline PowerLawFit exponent_fit(const std::vector<std::pair<double, double>>& series) {
    if (series.size() < 6) throw DomainError("exponent_fit: need at least six points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& [x, y] : series) {
        if (!(x > 0.0) || !(y > 0.0)) throw DomainError("exponent_fit: data must be positive");
        const double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        syy += ly * ly;
    }
    const double n = static_cast<double>(series.size());
    const double cxx = sxx - sx * sx / n;
    const double cxy = sxy - sx * sy / n;
    const double cyy = syy - sy * sy / n;
    if (!(cxx > 0.0)) throw DomainError("exponent_fit: x values must not all coincide");
    PowerLawFit fit;
    fit.exponent = cxy / cxx;
    fit.amplitude = std::exp((sy - fit.exponent * sx) / n);
    fit.r2 = cyy > 0.0 ? (cxy * cxy) / (cxx * cyy) : 1.0;
    return fit;
}

}  // namespace wsaw
