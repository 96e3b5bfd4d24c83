#pragma once

// Continuous-time simple random walk on Z or on the box [-N, N], with
// self-intersection weights exp(-g sum_x phi(L_{T,x})).
//
// Estimators:
//   * conditional moments of X(T) under the weighted measure, by sequential
//     importance sampling with resampling (independent replicas give the
//     standard error);
//   * the Laplace-transformed box two-point function, by sampling T from
//     the exponential law.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "wsaw/error.hpp"
#include "wsaw/model.hpp"

namespace wsaw {

struct WalkDomain {
    bool box = false;
    int N = 0;

    static WalkDomain full() { return {}; }
    static WalkDomain make_box(int n) {
        if (n < 0) throw DomainError("box half-width must be nonnegative");
        return {true, n};
    }

    /// Total jump rate at x: 2 in the bulk, 1 at a box endpoint, 0 if N = 0.
    double rate(int x) const {
        if (!box) return 2.0;
        if (N == 0) return 0.0;
        return (x == -N || x == N) ? 1.0 : 2.0;
    }

    template <class Rng>
    int step(int x, Rng& rng) const {
        if (box) {
            if (x == -N) return x + 1;
            if (x == N) return x - 1;
        }
        return (rng() & 1u) ? x + 1 : x - 1;
    }
};

using Rng = std::mt19937_64;

/// Independent stream for (seed, stream index).
inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

struct Trajectory {
    std::vector<double> jump_times;  ///< ascending, in (0, T_final)
    std::vector<int> positions;      ///< positions[0] is the start, positions[k] after the k-th jump
    double T_final = 0.0;
    std::map<int, double> local_times;

    int final_position() const { return positions.back(); }
};

inline Trajectory sample_trajectory(std::uint64_t seed, double T, WalkDomain domain = WalkDomain::full(),
                                    int start = 0) {
    if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("sample_trajectory: T must be positive");
    if (domain.box && std::abs(start) > domain.N) throw DomainError("start outside the box");
    Rng rng = make_stream(seed, 0);
    Trajectory tr;
    tr.T_final = T;
    tr.positions.push_back(start);
    int x = start;
    double now = 0.0;
    for (;;) {
        const double rate = domain.rate(x);
        const double hold = rate > 0.0 ? std::exponential_distribution<double>(rate)(rng)
                                       : std::numeric_limits<double>::infinity();
        if (now + hold >= T) {
            tr.local_times[x] += T - now;
            break;
        }
        tr.local_times[x] += hold;
        now += hold;
        x = domain.step(x, rng);
        tr.jump_times.push_back(now);
        tr.positions.push_back(x);
    }
    return tr;
}

/// log of exp(-g sum_x phi(L_{T,x})).
inline double gibbs_weight(const Trajectory& tr, const ModelParams& params) {
    double s = 0.0;
    for (const auto& [site, L] : tr.local_times) s += params.phi(L);
    return -params.g * s;
}

struct WeightedEstimate {
    double value = 0.0;
    double std_error = 0.0;
    long long n_samples = 0;
    double effective_sample_size = 0.0;
    bool low_confidence = false;  ///< ESS below 30
};

// ---------------------------------------------------------------------------
// Sequential importance sampling with resampling

struct SmcOptions {
    int replicas = 20;
    double dt = 0.25;                  ///< resampling checkpoints
    double resample_threshold = 0.5;   ///< resample when ESS < threshold * particles; 0 disables
    WalkDomain domain = WalkDomain::full();
    int start = 0;
};

/// Final particle positions and log weights of one replica.
struct ParticleCloud {
    std::vector<int> x;
    std::vector<double> log_w;
    int resamples = 0;
};

namespace detail {

/// Local times of one walker on a window of sites that grows on demand.
struct LocalTimes {
    int lo = 0;
    std::vector<double> L{0.0};

    double& at(int x) {
        if (x < lo) {
            L.insert(L.begin(), static_cast<std::size_t>(lo - x), 0.0);
            lo = x;
        } else if (x >= lo + static_cast<int>(L.size())) {
            L.resize(static_cast<std::size_t>(x - lo) + 1, 0.0);
        }
        return L[static_cast<std::size_t>(x - lo)];
    }
};

/// Runs the walker for time `span`; returns the log-weight increment.
inline double advance(int& x, LocalTimes& lt, double span, const WalkDomain& domain, const ModelParams& params,
                      Rng& rng) {
    double inc = 0.0;
    double remaining = span;
    for (;;) {
        const double rate = domain.rate(x);
        const double hold = rate > 0.0 ? std::exponential_distribution<double>(rate)(rng)
                                       : std::numeric_limits<double>::infinity();
        const double stay = std::min(hold, remaining);
        double& L = lt.at(x);
        inc -= params.g * (params.phi(L + stay) - params.phi(L));
        L += stay;
        if (hold >= remaining) return inc;
        remaining -= hold;
        x = domain.step(x, rng);
    }
}

inline double ess_of(const std::vector<double>& log_w) {
    const double m = *std::max_element(log_w.begin(), log_w.end());
    double s = 0.0, s2 = 0.0;
    for (double lw : log_w) {
        const double w = std::exp(lw - m);
        s += w;
        s2 += w * w;
    }
    return s2 > 0.0 ? s * s / s2 : 0.0;
}

}  // namespace detail

inline ParticleCloud run_smc(const ModelParams& params, double T, int particles, std::uint64_t seed,
                             std::uint64_t replica, const SmcOptions& opts = {}) {
    if (!(T > 0.0)) throw DomainError("run_smc: T must be positive");
    if (particles < 1) throw DomainError("run_smc: need at least one particle");
    Rng rng = make_stream(seed, replica);
    const auto n = static_cast<std::size_t>(particles);
    std::vector<int> x(n, opts.start);
    std::vector<detail::LocalTimes> lt(n);
    for (auto& l : lt) l.lo = opts.start;
    std::vector<double> log_w(n, 0.0);
    ParticleCloud cloud;

    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double now = 0.0;
    while (now < T) {
        const double span = std::min(opts.dt, T - now);
        for (std::size_t i = 0; i < n; ++i) log_w[i] += detail::advance(x[i], lt[i], span, opts.domain, params, rng);
        now += span;
        if (now >= T || opts.resample_threshold <= 0.0) continue;
        if (detail::ess_of(log_w) >= opts.resample_threshold * particles) continue;

        // systematic resampling
        const double m = *std::max_element(log_w.begin(), log_w.end());
        std::vector<double> cum(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) cum[i] = (total += std::exp(log_w[i] - m));
        const double u0 = uni(rng);
        std::vector<int> nx(n);
        std::vector<detail::LocalTimes> nlt(n);
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double target = (u0 + static_cast<double>(i)) / particles * total;
            while (k + 1 < n && cum[k] < target) ++k;
            nx[i] = x[k];
            nlt[i] = lt[k];
        }
        x.swap(nx);
        lt.swap(nlt);
        std::fill(log_w.begin(), log_w.end(), 0.0);
        ++cloud.resamples;
    }
    cloud.x = std::move(x);
    cloud.log_w = std::move(log_w);
    return cloud;
}

/// Self-normalized estimate of E[f(X) | cond(X)] from one particle cloud,
/// with the delta-method standard error and the Kish ESS of the conditioned weights.
inline WeightedEstimate cloud_estimate(const ParticleCloud& cloud, const std::function<double(int)>& f,
                                       const std::function<bool(int)>& cond) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cloud.x.size(); ++i)
        if (cond(cloud.x[i])) m = std::max(m, cloud.log_w[i]);
    WeightedEstimate est;
    est.n_samples = static_cast<long long>(cloud.x.size());
    if (!std::isfinite(m)) {
        est.value = std::numeric_limits<double>::quiet_NaN();
        est.low_confidence = true;
        return est;
    }
    double s = 0.0, s2 = 0.0, sf = 0.0;
    for (std::size_t i = 0; i < cloud.x.size(); ++i) {
        if (!cond(cloud.x[i])) continue;
        const double w = std::exp(cloud.log_w[i] - m);
        s += w;
        s2 += w * w;
        sf += w * f(cloud.x[i]);
    }
    est.value = sf / s;
    double var = 0.0;
    for (std::size_t i = 0; i < cloud.x.size(); ++i) {
        if (!cond(cloud.x[i])) continue;
        const double w = std::exp(cloud.log_w[i] - m) / s;
        const double d = f(cloud.x[i]) - est.value;
        var += w * w * d * d;
    }
    est.std_error = std::sqrt(var);
    est.effective_sample_size = s * s / s2;
    est.low_confidence = est.effective_sample_size < 30.0;
    return est;
}

/// Combines replica estimates: mean value, standard error from the spread
/// between replicas (delta method when there is a single replica).
inline WeightedEstimate combine_replicas(const std::vector<WeightedEstimate>& parts) {
    if (parts.empty()) throw DomainError("combine_replicas: nothing to combine");
    WeightedEstimate out;
    double sum = 0.0;
    for (const auto& p : parts) {
        sum += p.value;
        out.n_samples += p.n_samples;
        out.effective_sample_size += p.effective_sample_size;
    }
    const double r = static_cast<double>(parts.size());
    out.value = sum / r;
    if (parts.size() == 1) {
        out.std_error = parts.front().std_error;
    } else {
        double ss = 0.0;
        for (const auto& p : parts) ss += (p.value - out.value) * (p.value - out.value);
        out.std_error = std::sqrt(ss / (r - 1.0) / r);
    }
    out.low_confidence = out.effective_sample_size < 30.0 || !std::isfinite(out.value);
    return out;
}

/// Runs the replicas and evaluates several conditional expectations on the
/// same particles: E[f_k(X(T)) | X(T) != 0].
inline std::vector<WeightedEstimate> estimate_conditional(const ModelParams& params, double T, long long n_samples,
                                                          std::uint64_t seed,
                                                          const std::vector<std::function<double(int)>>& fs,
                                                          const SmcOptions& opts = {}) {
    if (n_samples < 1) throw DomainError("n_samples must be positive");
    if (opts.replicas < 1) throw DomainError("need at least one replica");
    const int per = static_cast<int>(std::max<long long>(1, n_samples / opts.replicas));
    std::vector<std::vector<WeightedEstimate>> parts(fs.size());
    auto nonzero = [](int x) { return x != 0; };
    for (int r = 0; r < opts.replicas; ++r) {
        const ParticleCloud cloud = run_smc(params, T, per, seed, static_cast<std::uint64_t>(r), opts);
        for (std::size_t k = 0; k < fs.size(); ++k) parts[k].push_back(cloud_estimate(cloud, fs[k], nonzero));
    }
    std::vector<WeightedEstimate> out;
    for (const auto& p : parts) out.push_back(combine_replicas(p));
    return out;
}

/// E[X(T)^k | X(T) > 0] under the weighted measure. By the reflection
/// symmetry X -> -X this equals E[|X|^k | X != 0], which uses both signs.
inline WeightedEstimate estimate_conditional_moment(const ModelParams& params, double T, int k, long long n_samples,
                                                    std::uint64_t seed, const SmcOptions& opts = {}) {
    if (n_samples < 1000) throw DomainError("estimate_conditional_moment: need at least 1000 samples");
    if (k < 0) throw DomainError("moment order must be nonnegative");
    if (opts.domain.box && opts.domain.N > 0 && opts.start != 0)
        throw DomainError("the symmetric estimator needs a walk started at the centre");
    auto f = [k](int x) { return std::pow(std::abs(static_cast<double>(x)), k); };
    return estimate_conditional(params, T, n_samples, seed, {f}, opts).front();
}

/// P(| |X(T)|/T - theta | >= eps | X(T) != 0).
inline WeightedEstimate estimate_concentration(const ModelParams& params, double T, double theta, double eps,
                                               long long n_samples, std::uint64_t seed,
                                               const SmcOptions& opts = {}) {
    auto f = [T, theta, eps](int x) { return std::abs(std::abs(x) / T - theta) >= eps ? 1.0 : 0.0; };
    return estimate_conditional(params, T, n_samples, seed, {f}, opts).front();
}

// ---------------------------------------------------------------------------
// Laplace-transformed box two-point function

struct LaplaceOptions {
    int chunk = 1000;  ///< samples per RNG stream
};

/// G^N_ij(g, nu) = int_0^inf E_i[exp(-g sum phi(L)) 1{X(T) = j}] e^{-nu T} dT,
/// sampling T from the exponential law truncated at T_max.
inline WeightedEstimate estimate_laplace_two_point(const ModelParams& params, int N, int i, int j, double T_max,
                                                   long long n_samples, std::uint64_t seed,
                                                   const LaplaceOptions& opts = {}) {
    if (!(params.nu > 0.0)) throw DomainError("Laplace estimator needs nu > 0");
    if (!(T_max > 0.0)) throw DomainError("T_max must be positive");
    if (n_samples < 2) throw DomainError("need at least two samples");
    const WalkDomain domain = WalkDomain::make_box(N);
    if (std::abs(i) > N || std::abs(j) > N) throw DomainError("endpoints must lie in the box");

    const double mass = -std::expm1(-params.nu * T_max);  // P(T <= T_max)
    const double scale = mass / params.nu;
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    double s = 0.0, s2 = 0.0;
    long long done = 0;
    for (std::uint64_t chunk = 0; done < n_samples; ++chunk) {
        Rng rng = make_stream(seed, chunk);
        const long long todo = std::min<long long>(opts.chunk, n_samples - done);
        for (long long k = 0; k < todo; ++k) {
            const double T = -std::log1p(-uni(rng) * mass) / params.nu;
            int x = i;
            detail::LocalTimes lt;
            lt.lo = i;
            const double log_w = detail::advance(x, lt, T, domain, params, rng);
            const double v = (x == j) ? std::exp(log_w) : 0.0;
            s += v;
            s2 += v * v;
        }
        done += todo;
    }
    const double n = static_cast<double>(n_samples);
    const double mean = s / n;
    const double var = std::max(0.0, (s2 / n - mean * mean) * n / (n - 1.0));
    WeightedEstimate est;
    est.value = scale * mean;
    est.std_error = scale * std::sqrt(var / n);
    est.n_samples = n_samples;
    est.effective_sample_size = s2 > 0.0 ? s * s / s2 : 0.0;
    est.low_confidence = est.effective_sample_size < 30.0;
    return est;
}

}  // namespace wsaw
