// znh: survival-probability sweeps, discrepancy maps and single-point
// evaluations for time-dependent non-Hermitian Hamiltonians.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "znh/config.hpp"
#include "znh/experiments.hpp"
#include "znh/perturbative.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void write_outputs(const std::filesystem::path& dir, const std::string& stem, const std::string& csv,
                   const std::string& svg, const std::string& meta) {
    std::filesystem::create_directories(dir);
    znh::write_text((dir / (stem + ".csv")).string(), csv);
    znh::write_text((dir / (stem + ".svg")).string(), svg);
    znh::write_text((dir / (stem + ".json")).string(), meta);
}

int run_sweep(const std::string& config, const std::string& out) {
    const auto spec = znh::parse_sweep_config(znh::read_text(config));
    const auto result = znh::run_sweep(spec);
    write_outputs(out, "sweep", znh::to_csv(result), znh::to_svg(result), znh::metadata_json(result));
    std::size_t flagged = 0;
    for (const auto& row : result.rows) {
        flagged += row.flagged ? 1 : 0;
        for (const auto& e : row.errors) std::cerr << "k=" << row.k << " state=" << row.state << ": " << e << '\n';
    }
    std::cout << result.rows.size() << " points, " << flagged << " flagged, written to " << out << '\n';
    return result.failed() ? kExitNumerical : 0;
}

int run_map(const std::string& config, const std::string& out) {
    const auto spec = znh::parse_map_config(znh::read_text(config));
    const auto map = znh::run_discrepancy_map(spec);
    write_outputs(out, "map", znh::to_csv(map), znh::to_svg(map), znh::metadata_json(map));
    for (const auto& c : map.cells)
        if (!c.error.empty()) std::cerr << "ratio=" << c.ratio << " t=" << c.t << ": " << c.error << '\n';
    std::cout << map.cells.size() << " cells, max discrepancy " << znh::format_double(map.max_value())
              << ", written to " << out << '\n';
    return map.failed() ? kExitNumerical : 0;
}

int run_survive(const std::string& preset, const std::vector<std::string>& pairs, const std::string& state_name,
                double t1, double t, const std::string& engine) {
    const znh::ParamMap params = znh::parse_param_pairs(pairs);
    const auto model = znh::make_preset(preset, params);
    const auto state = znh::named_state(state_name);
    if (engine == "exact") {
        std::cout << znh::format_double(znh::survival_exact(model, state.amplitudes, t1, t)) << '\n';
    } else if (engine == "second") {
        const auto b = znh::survival_second_order(model, state.amplitudes, t1, t);
        std::cout << znh::format_double(b.total) << '\n';
        std::cerr << "first_order " << znh::format_double(b.first_order.real()) << " delta_plus "
                  << znh::format_double(b.delta_plus_term.real()) << " delta_minus "
                  << znh::format_double(b.delta_minus_term) << " cross " << znh::format_double(b.cross.real())
                  << (b.validity_warning ? " (outside the perturbative regime)" : "") << '\n';
    } else {
        if (preset != "oscillating-decay") throw znh::ConfigError("the closed form exists only for oscillating-decay");
        if (t1 != 0.0) throw znh::ConfigError("the closed form assumes t1 = 0");
        const znh::OscillatingDecayParams p{params.at("omega0"), params.at("gamma"), params.at("omega")};
        std::cout << znh::format_double(znh::survival_oscillating_decay_closed_form(p, state.amplitudes, t)) << '\n';
    }
    return 0;
}

void list_presets() {
    for (const auto& p : znh::preset_catalog()) {
        std::cout << p.name << "\n  " << p.formula << "\n  params:";
        for (const auto& name : p.params) std::cout << ' ' << name;
        std::cout << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Survival probabilities under time-dependent non-Hermitian Hamiltonians"};
    app.set_version_flag("--version", znh::kToolVersion);
    app.require_subcommand(1);

    std::string config, out;
    auto* sweep = app.add_subcommand("sweep", "Exact and second-order survival as a function of k = omega/omega0");
    sweep->add_option("--config", config, "JSON sweep configuration")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", out, "Output directory")->required();

    auto* map = app.add_subcommand("map", "Discrepancy |P_exact - P_2| over (omega/omega0, t)");
    map->add_option("--config", config, "JSON map configuration")->required()->check(CLI::ExistingFile);
    map->add_option("--out", out, "Output directory")->required();

    std::string preset, state = "plus", engine = "exact";
    std::vector<std::string> pairs;
    double t1 = 0.0, t = 0.0;
    auto* survive = app.add_subcommand("survive", "Survival probability of one state at one time");
    survive->add_option("--model", preset, "Preset name (see 'znh presets')")->required();
    survive->add_option("--params", pairs, "Parameters as key=value");
    survive->add_option("--state", state, "plus, minus, plus_x, minus_x, plus_y or minus_y")->capture_default_str();
    survive->add_option("--t1", t1, "Start time")->capture_default_str();
    survive->add_option("--t", t, "Observation time")->required();
    survive->add_option("--engine", engine, "Evaluation engine")
        ->check(CLI::IsMember({"exact", "second", "closed"}))
        ->capture_default_str();

    app.add_subcommand("presets", "List the built-in models");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sweep) return run_sweep(config, out);
        if (*map) return run_map(config, out);
        if (*survive) return run_survive(preset, pairs, state, t1, t, engine);
        list_presets();
        return 0;
    } catch (const znh::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const znh::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
