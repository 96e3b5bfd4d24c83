#pragma once

// Subcommand implementations for the wsaw command-line tool. Each returns a
// process exit code: 0 success, 1 numerical failure, 2 usage or config error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsaw/wsaw.hpp"

namespace wsaw::cli {

inline constexpr int kOk = 0;
inline constexpr int kNumericalFailure = 1;
inline constexpr int kUsageError = 2;

struct Context {
    RunConfig config;
    std::string out_dir;
    std::ostream* log = &std::cout;

    std::string path(const std::string& name) const {
        std::filesystem::create_directories(out_dir);
        return (std::filesystem::path(out_dir) / name).string();
    }
};

inline void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << j.dump(2) << '\n';
}

/// Offsets nu - nu_c = 2^-k, k = 3..12, unless the config lists its own.
inline std::vector<double> default_offsets(const std::vector<double>& configured) {
    if (!configured.empty()) return configured;
    std::vector<double> out;
    for (int k = 3; k <= 12; ++k) out.push_back(std::ldexp(1.0, -k));
    return out;
}

inline const char* kSpeedHeader[] = {"g", "nu_c", "theta", "u_bar", "gap", "s_max", "n_nodes"};

inline int cmd_speed(const Context& ctx) {
    const RunConfig& c = ctx.config;
    if (c.g_list.empty()) {
        std::cerr << "speed: the g list is empty\n";
        return kUsageError;
    }
    std::vector<double> gs = c.g_list;
    std::sort(gs.begin(), gs.end());
    const auto rows = sweep(gs, c.phi, c.critical_options());

    CsvTable csv;
    csv.header.assign(std::begin(kSpeedHeader), std::end(kSpeedHeader));
    nlohmann::json failures = nlohmann::json::array();
    std::vector<std::pair<double, double>> small_g;
    for (const auto& r : rows) {
        if (!r.point) {
            failures.push_back({{"g", r.g}, {"error", r.error}});
            continue;
        }
        const CriticalPoint& p = *r.point;
        csv.add_row({fmt12(p.g), fmt12(p.nu_c), fmt12(p.theta), fmt12(p.u_bar), fmt12(p.gap),
                      fmt12(p.grid_spec.s_max), std::to_string(p.n_nodes)});
        if (p.g >= 1e-3 * (1 - 1e-12) && p.g <= 1e-1 * (1 + 1e-12)) small_g.emplace_back(p.g, p.theta);
    }
    csv.write(ctx.path("speed.csv"));

    nlohmann::json summary{{"points", rows.size()}, {"failures", failures}};
    if (small_g.size() >= 6) {
        const PowerLawFit fit = exponent_fit(small_g);
        summary["small_g_fit"] = {{"exponent", fit.exponent}, {"amplitude", fit.amplitude}, {"r2", fit.r2},
                                  {"points", small_g.size()}};
    }
    write_json(ctx.path("speed.json"), summary);
    *ctx.log << csv.str();
    return failures.empty() ? kOk : kNumericalFailure;
}

inline int cmd_critical_nu(const Context& ctx) {
    const RunConfig& c = ctx.config;
    if (c.g_list.empty()) {
        std::cerr << "critical-nu: the g list is empty\n";
        return kUsageError;
    }
    CsvTable csv;
    csv.header = {"g", "nu_c", "lambda", "dlambda_dnu", "dlambda_dg", "newton_iterations", "s_max"};
    int status = kOk;
    for (double g : c.g_list) {
        try {
            const CriticalPoint p = find_nu_c(g, c.phi, c.critical_options());
            csv.add_row({fmt12(g), fmt12(p.nu_c), fmt12(p.lambda), fmt12(p.dlambda_dnu_at_nuc),
                         fmt12(p.dlambda_dg_at_nuc), std::to_string(p.newton_iterations), fmt12(p.grid_spec.s_max)});
        } catch (const NumericalError& e) {
            std::cerr << "g = " << g << ": " << e.what() << '\n';
            status = kNumericalFailure;
        }
    }
    csv.write(ctx.path("critical_nu.csv"));
    *ctx.log << csv.str();
    return status;
}

inline int cmd_twopoint(const Context& ctx) {
    const RunConfig& c = ctx.config;
    const auto& s = c.twopoint;
    if (s.j_max < 1) {
        std::cerr << "twopoint: j_max must be >= 1\n";
        return kUsageError;
    }
    const CriticalOptions opts = c.critical_options();
    const CriticalPoint crit = find_nu_c(s.g, c.phi, opts);
    if (s.nu < crit.nu_c && !s.allow_divergent) {
        std::cerr << "twopoint: nu = " << s.nu << " is below nu_c = " << crit.nu_c
                  << "; pass --allow-divergent to compute anyway\n";
        return kUsageError;
    }
    auto grid = std::make_shared<const QuadGrid>(build_grid(crit.grid_spec));
    const ModelParams params{s.g, s.nu, c.phi};
    const Evaluation ev = evaluate(params, grid, c.representation, opts.eigen);
    const FixedPoint fp = fixed_point_q(params, grid, c.representation, opts.fixed_point);
    const auto table = two_point_table(*ev.Q, fp.q, s.j_max);

    CsvTable csv;
    csv.header = {"j", "G0j"};
    for (int j = 0; j <= s.j_max; ++j) csv.add_row({std::to_string(j), fmt12(table[static_cast<std::size_t>(j)])});
    csv.write(ctx.path("twopoint.csv"));

    // decay rate from the upper half of the table
    const int j0 = s.j_max / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int j = j0; j <= s.j_max; ++j) {
        const double y = std::log(table[static_cast<std::size_t>(j)]);
        sx += j;
        sy += y;
        sxx += double(j) * j;
        sxy += j * y;
        ++n;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    write_json(ctx.path("twopoint.json"), {{"g", s.g},
                                           {"nu", s.nu},
                                           {"nu_c", crit.nu_c},
                                           {"lambda", ev.spec.lambda},
                                           {"fitted_log_decay", slope},
                                           {"log_lambda", std::log(ev.spec.lambda)},
                                           {"fixed_point_iterations", fp.iterations}});
    *ctx.log << csv.str();
    return kOk;
}

namespace detail {

/// Operator, eigenvalue and q at nu_c + offset on the grid where nu_c was found.
struct OffsetPoint {
    double nu = 0.0;
    Evaluation eval;
    FixedPoint fp;
};

inline OffsetPoint at_offset(const RunConfig& c, const CriticalPoint& crit, double offset) {
    const CriticalOptions opts = c.critical_options();
    auto grid = std::make_shared<const QuadGrid>(build_grid(crit.grid_spec));
    OffsetPoint p;
    p.nu = crit.nu_c + offset;
    const ModelParams params{crit.g, p.nu, c.phi};
    p.eval = evaluate(params, grid, c.representation, opts.eigen);
    p.fp = fixed_point_q(params, grid, c.representation, opts.fixed_point);
    return p;
}

}  // namespace detail

inline int cmd_susceptibility(const Context& ctx) {
    const RunConfig& c = ctx.config;
    const auto& s = c.susceptibility;
    const CriticalPoint crit = speed(s.g, c.phi, c.critical_options());
    const auto offsets = default_offsets(s.offsets);

    CsvTable csv;
    csv.header = {"nu", "offset", "chi_plus", "G00", "residue"};
    for (int k = 1; k <= s.k_max; ++k) csv.header.push_back("xi_" + std::to_string(k));
    std::vector<std::pair<double, double>> chi_series, xi_series;
    double last_residue = 0.0;
    for (double off : offsets) {
        const auto p = detail::at_offset(c, crit, off);
        const MomentSums m = moment_sums(*p.eval.Q, p.fp.q, p.eval.spec.lambda, std::max(s.k_max, 1));
        std::vector<std::string> row{fmt12(p.nu), fmt12(off), fmt12(m.chi_plus), fmt12(m.g00),
                                     fmt12(off * m.chi_plus)};
        for (int k = 1; k <= s.k_max; ++k) row.push_back(fmt12(m.xi.at(k)));
        csv.add_row(std::move(row));
        chi_series.emplace_back(off, m.chi_plus);
        xi_series.emplace_back(off, m.xi.at(1));
        last_residue = off * m.chi_plus;
    }
    csv.write(ctx.path("susceptibility.csv"));
    nlohmann::json summary{{"g", s.g},
                           {"nu_c", crit.nu_c},
                           {"theta", crit.theta},
                           {"u_bar", crit.u_bar},
                           {"residue_limit", crit.u_bar * crit.theta},
                           {"residue_at_smallest_offset", last_residue}};
    if (chi_series.size() >= 6) {
        summary["gamma"] = -exponent_fit(chi_series).exponent;
        summary["nu_1"] = -exponent_fit(xi_series).exponent;
    }
    write_json(ctx.path("susceptibility.json"), summary);
    *ctx.log << csv.str();
    return kOk;
}

inline int cmd_moments(const Context& ctx) {
    const RunConfig& c = ctx.config;
    const auto& s = c.susceptibility;
    const int k_max = std::max(s.k_max, 1);
    const CriticalPoint crit = speed(s.g, c.phi, c.critical_options());
    const auto offsets = default_offsets(s.offsets);

    CsvTable csv;
    csv.header = {"nu", "offset", "k", "moment", "xi", "scaled_moment", "predicted_limit"};
    for (double off : offsets) {
        const auto p = detail::at_offset(c, crit, off);
        const MomentSums m = moment_sums(*p.eval.Q, p.fp.q, p.eval.spec.lambda, k_max);
        double fact = 1.0;
        for (int k = 0; k <= k_max; ++k) {
            if (k > 0) fact *= k;
            const double scaled = std::pow(off, k + 1) * m.moment.at(k);
            const double limit = crit.u_bar * fact * std::pow(crit.theta, k + 1);
            csv.add_row({fmt12(p.nu), fmt12(off), std::to_string(k), fmt12(m.moment.at(k)),
                         k > 0 ? fmt12(m.xi.at(k)) : "", fmt12(scaled), fmt12(limit)});
        }
    }
    csv.write(ctx.path("moments.csv"));
    *ctx.log << csv.str();
    return kOk;
}

inline int cmd_monotonicity(const Context& ctx, const std::vector<double>& g_values) {
    const RunConfig& c = ctx.config;
    if (g_values.empty()) {
        std::cerr << "monotonicity: no g values\n";
        return kUsageError;
    }
    CsvTable csv;
    csv.header = {"g", "n", "c_n"};
    nlohmann::json verdicts = nlohmann::json::array();
    bool all_ok = true;
    for (double g : g_values) {
        CriticalState st = find_critical_state(g, c.phi, c.critical_options());
        fill_second_derivs(*st.eval.Q, st.eval.spec);
        const CnSequence cn = cn_sequence(*st.eval.Q, st.eval.spec, c.monotonicity.N);
        const Certificate cert = L_lambda(cn);
        const double L2 = L_from_derivatives(st.eval.spec);
        for (std::size_t n = 0; n < cn.c.size(); ++n) csv.add_row({fmt12(g), std::to_string(n), fmt12(cn.c[n])});
        const bool c0_positive = cn.c.front() > 0.0;
        double min_cn = 0.0;
        for (double v : cn.c) min_cn = std::min(min_cn, v);
        const bool ok = cert.negative && c0_positive;
        all_ok = all_ok && ok;
        nlohmann::json v{{"g", g},
                         {"nu_c", st.point.nu_c},
                         {"theta", st.point.theta},
                         {"L", cert.L},
                         {"tail_bound", cert.tail_bound},
                         {"L_from_second_derivatives", L2},
                         {"relative_difference", std::abs(cert.L - L2) / std::abs(L2)},
                         {"dtheta_dg", dtheta_dg(st.point.theta, cert.L)},
                         {"c0", cn.c.front()},
                         {"min_cn", min_cn},
                         {"certificate", ok ? "pass" : "fail"}};
        if (!c.monotonicity.Hn.empty()) {
            nlohmann::json hn = nlohmann::json::array();
            for (const auto& r : Hn_consistency(st, c.monotonicity.Hn))
                hn.push_back({{"n", r.n},
                              {"formula", r.formula},
                              {"finite_difference", r.finite_difference},
                              {"relative_discrepancy", r.rel_discrepancy},
                              {"distance_to_L", r.distance_to_L}});
            v["Hn"] = hn;
        }
        verdicts.push_back(v);
    }
    csv.write(ctx.path("cn.csv"));
    write_json(ctx.path("monotonicity.json"), {{"verdicts", verdicts}, {"all_pass", all_ok}});
    *ctx.log << nlohmann::json(verdicts).dump(2) << '\n';
    return all_ok ? kOk : kNumericalFailure;
}

inline int cmd_simulate(const Context& ctx, const std::string& mode) {
    const RunConfig& c = ctx.config;
    const auto& m = c.mc;
    if (mode == "moments") {
        const CriticalPoint crit = find_nu_c(m.g, c.phi, c.critical_options());
        SmcOptions so;
        so.replicas = m.replicas;
        so.dt = m.dt;
        const ModelParams params{m.g, 0.0, c.phi};
        nlohmann::json rows = nlohmann::json::array();
        for (double T : m.T_list) {
            auto speed_f = [T](int x) { return std::abs(x) / T; };
            auto conc_f = [T, th = crit.theta](int x) { return std::abs(std::abs(x) / T - th) >= 0.1 ? 1.0 : 0.0; };
            const auto est = estimate_conditional(params, T, m.samples, m.seed, {speed_f, conc_f}, so);
            rows.push_back({{"T", T},
                            {"estimate", est[0].value},
                            {"std_error", est[0].std_error},
                            {"ess", est[0].effective_sample_size},
                            {"n_samples", est[0].n_samples},
                            {"concentration", est[1].value},
                            {"concentration_std_error", est[1].std_error},
                            {"low_confidence", est[0].low_confidence}});
        }
        const nlohmann::json out{{"mode", "moments"}, {"g", m.g},          {"seed", m.seed},
                                 {"theta_spectral", crit.theta}, {"rows", rows}};
        write_json(ctx.path("simulate_moments.json"), out);
        *ctx.log << out.dump(2) << '\n';
        return kOk;
    }
    if (mode == "laplace") {
        const ModelParams params{m.g, m.nu, c.phi};
        const WeightedEstimate est = estimate_laplace_two_point(params, m.N, m.i, m.j, m.T_max, m.samples, m.seed);
        auto grid = std::make_shared<const QuadGrid>(build_grid(c.grid));
        const auto Q = assemble(KernelKind::K0, params, grid, c.representation);
        const auto A = assemble(KernelKind::K1Weighted, params, grid, c.representation);
        const double spectral = finite_volume_two_point(Q, A, m.N, m.i, m.j);
        const nlohmann::json out{{"mode", "laplace"},
                                 {"g", m.g},
                                 {"nu", m.nu},
                                 {"N", m.N},
                                 {"i", m.i},
                                 {"j", m.j},
                                 {"estimate", est.value},
                                 {"std_error", est.std_error},
                                 {"ess", est.effective_sample_size},
                                 {"n_samples", est.n_samples},
                                 {"seed", m.seed},
                                 {"spectral", spectral},
                                 {"z_score", (est.value - spectral) / est.std_error}};
        write_json(ctx.path("simulate_laplace.json"), out);
        *ctx.log << out.dump(2) << '\n';
        return kOk;
    }
    std::cerr << "simulate: unknown mode '" << mode << "' (expected moments or laplace)\n";
    return kUsageError;
}

}  // namespace wsaw::cli
