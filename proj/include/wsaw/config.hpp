#pragma once

// Run configuration, stored as JSON. Every field has a default, so an empty
// object is a valid config.
//
// {
//   "phi": [[2, 1.0]],
//   "grid": {"s_max": 100, "n_panels": 100, "nodes_per_panel": 10, "rule": "gauss-legendre"},
//   "representation": "auto",
//   "tolerances": {"eigen_residual": 1e-10, "newton": 1e-12, "fixed_point": 1e-12},
//   "g_list": [0.001, ..., 10],
//   "twopoint": {"g": 1, "nu": 0, "j_max": 40, "allow_divergent": false},
//   "susceptibility": {"g": 1, "offsets": [0.125, ...], "k_max": 2},
//   "monotonicity": {"N": 50, "Hn": [5, 10, 20, 40]},
//   "mc": {"g": 1, "T_list": [25, 50, 100], "samples": 100000, "seed": 1, "replicas": 20, "dt": 0.25,
//          "nu": 0.5, "N": 6, "i": 0, "j": 2, "T_max": 40},
//   "output": {"dir": "."}
// }

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wsaw/criticality.hpp"
#include "wsaw/error.hpp"
#include "wsaw/model.hpp"
#include "wsaw/quadrature.hpp"

namespace wsaw {

struct Tolerances {
    double eigen_residual = 1e-10;
    double newton = 1e-12;
    double fixed_point = 1e-12;
    bool operator==(const Tolerances&) const = default;
};

struct TwoPointSettings {
    double g = 1.0;
    double nu = 0.0;
    int j_max = 40;
    bool allow_divergent = false;
    bool operator==(const TwoPointSettings&) const = default;
};

struct SusceptibilitySettings {
    double g = 1.0;
    std::vector<double> offsets;  ///< nu - nu_c values; empty means 2^-k, k = 3..12
    int k_max = 2;
    bool operator==(const SusceptibilitySettings&) const = default;
};

struct MonotonicitySettings {
    int N = 50;
    std::vector<int> Hn{5, 10, 20, 40};
    bool operator==(const MonotonicitySettings&) const = default;
};

struct McSettings {
    double g = 1.0;
    std::vector<double> T_list{25.0, 50.0, 100.0};
    long long samples = 100000;
    std::uint64_t seed = 1;
    int replicas = 20;
    double dt = 0.25;
    double nu = 0.5;
    int N = 6;
    int i = 0;
    int j = 2;
    double T_max = 40.0;
    bool operator==(const McSettings&) const = default;
};

struct RunConfig {
    PhiSpec phi;
    GridSpec grid = GridSpec::default_preset();
    Representation representation = Representation::Auto;
    Tolerances tolerances;
    std::vector<double> g_list = log_spaced(1e-3, 10.0, 20);
    TwoPointSettings twopoint;
    SusceptibilitySettings susceptibility;
    MonotonicitySettings monotonicity;
    McSettings mc;
    std::string output_dir = ".";

    bool operator==(const RunConfig&) const = default;

    CriticalOptions critical_options() const {
        CriticalOptions o;
        o.grid = grid;
        o.representation = representation;
        o.tol = tolerances.newton;
        o.eigen.residual_tol = tolerances.eigen_residual;
        o.fixed_point.tol = tolerances.fixed_point;
        return o;
    }

    void validate() const {
        if (!(tolerances.eigen_residual > 0) || !(tolerances.newton > 0) || !(tolerances.fixed_point > 0))
            throw ConfigError("tolerances must be positive");
        for (double g : g_list)
            if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError("g_list entries must be positive");
        if (!(grid.s_max > 0.0) || grid.n_panels < 1 || grid.nodes_per_panel < 1)
            throw ConfigError("grid sizes must be positive");
        if (mc.samples < 1 || mc.replicas < 1 || !(mc.dt > 0.0)) throw ConfigError("invalid Monte Carlo settings");
        if (susceptibility.k_max < 0 || susceptibility.k_max > 6) throw ConfigError("k_max must lie in [0, 6]");
        if (monotonicity.N < 1) throw ConfigError("monotonicity.N must be >= 1");
    }
};

inline Representation parse_representation(const std::string& s) {
    if (s == "auto") return Representation::Auto;
    if (s == "dense") return Representation::Dense;
    if (s == "factored") return Representation::Factored;
    throw ConfigError("unknown representation '" + s + "'");
}

inline nlohmann::json to_json(const RunConfig& c) {
    using nlohmann::json;
    json phi = json::array();
    for (const auto& [k, a] : c.phi.terms()) phi.push_back({k, a});
    return json{
        {"phi", phi},
        {"grid",
         {{"s_max", c.grid.s_max},
          {"n_panels", c.grid.n_panels},
          {"nodes_per_panel", c.grid.nodes_per_panel},
          {"rule", std::string(to_string(c.grid.rule))}}},
        {"representation", std::string(to_string(c.representation))},
        {"tolerances",
         {{"eigen_residual", c.tolerances.eigen_residual},
          {"newton", c.tolerances.newton},
          {"fixed_point", c.tolerances.fixed_point}}},
        {"g_list", c.g_list},
        {"twopoint",
         {{"g", c.twopoint.g},
          {"nu", c.twopoint.nu},
          {"j_max", c.twopoint.j_max},
          {"allow_divergent", c.twopoint.allow_divergent}}},
        {"susceptibility",
         {{"g", c.susceptibility.g}, {"offsets", c.susceptibility.offsets}, {"k_max", c.susceptibility.k_max}}},
        {"monotonicity", {{"N", c.monotonicity.N}, {"Hn", c.monotonicity.Hn}}},
        {"mc",
         {{"g", c.mc.g},
          {"T_list", c.mc.T_list},
          {"samples", c.mc.samples},
          {"seed", c.mc.seed},
          {"replicas", c.mc.replicas},
          {"dt", c.mc.dt},
          {"nu", c.mc.nu},
          {"N", c.mc.N},
          {"i", c.mc.i},
          {"j", c.mc.j},
          {"T_max", c.mc.T_max}}},
        {"output", {{"dir", c.output_dir}}},
    };
}

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline const nlohmann::json& section(const nlohmann::json& j, const char* key) {
    static const nlohmann::json empty = nlohmann::json::object();
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_object()) throw ConfigError(std::string("'") + key + "' must be an object");
    return j.at(key);
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    try {
        if (j.contains("phi")) {
            std::vector<PhiSpec::Term> terms;
            for (const auto& t : j.at("phi")) terms.emplace_back(t.at(0).get<int>(), t.at(1).get<double>());
            c.phi = PhiSpec(terms);
        }
        const auto& g = detail::section(j, "grid");
        detail::read_opt(g, "s_max", c.grid.s_max);
        detail::read_opt(g, "n_panels", c.grid.n_panels);
        detail::read_opt(g, "nodes_per_panel", c.grid.nodes_per_panel);
        if (g.contains("rule")) c.grid.rule = parse_quad_rule(g.at("rule").get<std::string>());
        if (j.contains("representation")) c.representation = parse_representation(j.at("representation").get<std::string>());
        const auto& tol = detail::section(j, "tolerances");
        detail::read_opt(tol, "eigen_residual", c.tolerances.eigen_residual);
        detail::read_opt(tol, "newton", c.tolerances.newton);
        detail::read_opt(tol, "fixed_point", c.tolerances.fixed_point);
        detail::read_opt(j, "g_list", c.g_list);
        const auto& tp = detail::section(j, "twopoint");
        detail::read_opt(tp, "g", c.twopoint.g);
        detail::read_opt(tp, "nu", c.twopoint.nu);
        detail::read_opt(tp, "j_max", c.twopoint.j_max);
        detail::read_opt(tp, "allow_divergent", c.twopoint.allow_divergent);
        const auto& su = detail::section(j, "susceptibility");
        detail::read_opt(su, "g", c.susceptibility.g);
        detail::read_opt(su, "offsets", c.susceptibility.offsets);
        detail::read_opt(su, "k_max", c.susceptibility.k_max);
        const auto& mo = detail::section(j, "monotonicity");
        detail::read_opt(mo, "N", c.monotonicity.N);
        detail::read_opt(mo, "Hn", c.monotonicity.Hn);
        const auto& mc = detail::section(j, "mc");
        detail::read_opt(mc, "g", c.mc.g);
        detail::read_opt(mc, "T_list", c.mc.T_list);
        detail::read_opt(mc, "samples", c.mc.samples);
        detail::read_opt(mc, "seed", c.mc.seed);
        detail::read_opt(mc, "replicas", c.mc.replicas);
        detail::read_opt(mc, "dt", c.mc.dt);
        detail::read_opt(mc, "nu", c.mc.nu);
        detail::read_opt(mc, "N", c.mc.N);
        detail::read_opt(mc, "i", c.mc.i);
        detail::read_opt(mc, "j", c.mc.j);
        detail::read_opt(mc, "T_max", c.mc.T_max);
        detail::read_opt(detail::section(j, "output"), "dir", c.output_dir);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

inline std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2); }

}  // namespace wsaw
