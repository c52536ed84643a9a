#pragma once

// JSON configuration files for sweeps and discrepancy maps. Every malformed or
// unknown key raises ConfigError naming the offending path.
//
// Shared keys:
//   model        {"preset": name, "params": {key: value}}
//                or {"fourier": {"dim": n, "static": M, "modes": [{"frequency": w, "cos": M, "sin": M}]}}
//                where M is a row-major list of rows of [re, im] pairs (a plain
//                number is taken as real); missing matrices are zero
//   omega0       frequency unit
//   frame        "lab" | "interaction"
//   validity_threshold, discrepancy_tolerance
//   quadrature   {panels_per_period, nodes_per_panel, abs_tol, max_refinements}
//   propagation  {method: "rk4" | "dopri5", rel_tol, abs_tol, max_step, steps_per_period}
// Sweep keys: kind "sweep", k, t_obs, states, engines.
// Map keys: kind "map", omega_ratios, t (units of 1/omega0), state.
// Grids are a list of numbers, {"from": a, "to": b} (unit steps) or
// {"from": a, "to": b, "points": n}. States are names or
// {"label": s, "amplitudes": [...]}; explicit amplitudes are normalized.

#include <string>

#include "znh/experiments.hpp"

namespace znh {

std::string read_text(const std::string& path);

/// "sweep" or "map", from the kind key.
std::string config_kind(const std::string& text);

SweepSpec parse_sweep_config(const std::string& text);
DiscrepancyMapSpec parse_map_config(const std::string& text);

/// "k=v" pairs as given on a command line.
ParamMap parse_param_pairs(const std::vector<std::string>& pairs);

}  // namespace znh
