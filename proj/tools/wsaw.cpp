// wsaw: escape speed, critical point, Green's functions and Monte Carlo
// checks for the one-dimensional weakly self-avoiding walk.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
    using namespace wsaw;
    CLI::App app{"Weakly self-avoiding walk on Z: escape speed and related quantities"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::vector<double> g_values;
    bool quiet = false;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    app.add_option("--grid-preset", preset, "grid preset")->check(CLI::IsMember({"default", "fine-trapezoid"}));
    app.add_option("--seed", seed, "Monte Carlo seed (overrides mc.seed)");
    app.add_option("--g", g_values, "g values (override the configured list)");
    app.add_flag("--quiet", quiet, "do not echo results to stdout");

    auto* speed = app.add_subcommand("speed", "sweep g: nu_c, theta, u_bar; writes speed.csv and speed.json");
    auto* critical = app.add_subcommand("critical-nu", "critical nu_c(g) for each g");
    auto* twopoint = app.add_subcommand("twopoint", "G_0j table at (g, nu)");
    std::optional<double> tp_nu;
    std::optional<int> tp_jmax;
    bool allow_divergent = false;
    twopoint->add_option("--nu", tp_nu, "nu");
    twopoint->add_option("--j-max", tp_jmax, "largest |j|");
    twopoint->add_flag("--allow-divergent", allow_divergent, "permit nu below nu_c");
    auto* suscept = app.add_subcommand("susceptibility", "chi_+ and correlation lengths along nu_c + offsets");
    auto* moments = app.add_subcommand("moments", "moment sums and their residue limits along nu_c + offsets");
    std::optional<int> k_max;
    suscept->add_option("--k-max", k_max, "highest moment order (<= 6)");
    moments->add_option("--k-max", k_max, "highest moment order (<= 6)");
    auto* mono = app.add_subcommand("monotonicity", "c_n sequence and the sign certificate for theta'(g)");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimators");
    std::string mode = "moments";
    simulate->add_option("--mode", mode, "moments or laplace")->check(CLI::IsMember({"moments", "laplace"}));
    std::optional<long long> samples;
    simulate->add_option("--samples", samples, "number of samples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::kUsageError;
    }

    try {
        cli::Context ctx;
        ctx.config = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (preset == "fine-trapezoid") ctx.config.grid = GridSpec::fine_trapezoid_preset();
        if (preset == "default") ctx.config.grid = GridSpec::default_preset();
        if (seed) ctx.config.mc.seed = *seed;
        if (samples) ctx.config.mc.samples = *samples;
        const bool g_given = !g_values.empty();
        if (g_given) ctx.config.g_list = g_values;
        if (g_given) {
            ctx.config.twopoint.g = g_values.front();
            ctx.config.susceptibility.g = g_values.front();
            ctx.config.mc.g = g_values.front();
        }
        if (tp_nu) ctx.config.twopoint.nu = *tp_nu;
        if (tp_jmax) ctx.config.twopoint.j_max = *tp_jmax;
        if (allow_divergent) ctx.config.twopoint.allow_divergent = true;
        if (k_max) ctx.config.susceptibility.k_max = *k_max;
        ctx.config.validate();
        ctx.out_dir = out_dir.empty() ? ctx.config.output_dir : out_dir;
        std::ostringstream sink;
        if (quiet) ctx.log = &sink;

        if (speed->parsed()) return cli::cmd_speed(ctx);
        if (critical->parsed()) return cli::cmd_critical_nu(ctx);
        if (twopoint->parsed()) return cli::cmd_twopoint(ctx);
        if (suscept->parsed()) return cli::cmd_susceptibility(ctx);
        if (moments->parsed()) return cli::cmd_moments(ctx);
        if (mono->parsed()) {
            const std::vector<double> gs = g_given ? g_values : std::vector<double>{0.1, 1.0, 10.0};
            return cli::cmd_monotonicity(ctx, gs);
        }
        if (simulate->parsed()) return cli::cmd_simulate(ctx, mode);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return cli::kUsageError;
    } catch (const DomainError& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return cli::kUsageError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return cli::kNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kNumericalFailure;
    }
    return cli::kUsageError;
}
