#include "znh/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace znh {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) fail(where, "expected an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.contains(key)) fail(where, "unknown key '" + key + "'");
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(where, "must be finite");
    return v;
}

int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    return j.get<int>();
}

Complex complex_entry(const json& j, const std::string& where) {
    if (j.is_number()) return {number(j, where), 0.0};
    if (!j.is_array() || j.size() != 2) fail(where, "expected a number or an [re, im] pair");
    return {number(j[0], where + "[0]"), number(j[1], where + "[1]")};
}

CMatrix matrix(const json& j, Eigen::Index dim, const std::string& where) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != dim) fail(where, "expected " + std::to_string(dim) + " rows");
    CMatrix m(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        const json& row = j[r];
        const std::string rw = where + "[" + std::to_string(r) + "]";
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim)
            fail(rw, "expected " + std::to_string(dim) + " entries");
        for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = complex_entry(row[c], rw + "[" + std::to_string(c) + "]");
    }
    return m;
}

FourierHamiltonian fourier(const json& j, const std::string& where) {
    check_keys(j, where, {"dim", "static", "modes"});
    Eigen::Index dim = 0;
    if (j.contains("dim")) dim = integer(j["dim"], where + ".dim");
    else if (j.contains("static") && j["static"].is_array()) dim = static_cast<Eigen::Index>(j["static"].size());
    else fail(where, "need 'dim' or 'static'");
    if (dim < 1) fail(where + ".dim", "must be >= 1");

    FourierHamiltonian h;
    h.static_term = j.contains("static") ? matrix(j["static"], dim, where + ".static") : CMatrix::Zero(dim, dim);
    if (j.contains("modes")) {
        if (!j["modes"].is_array()) fail(where + ".modes", "expected a list");
        for (std::size_t i = 0; i < j["modes"].size(); ++i) {
            const json& m = j["modes"][i];
            const std::string mw = where + ".modes[" + std::to_string(i) + "]";
            check_keys(m, mw, {"frequency", "cos", "sin"});
            if (!m.contains("frequency")) fail(mw, "missing 'frequency'");
            FourierMode mode;
            mode.frequency = number(m["frequency"], mw + ".frequency");
            mode.cos_coeff = m.contains("cos") ? matrix(m["cos"], dim, mw + ".cos") : CMatrix::Zero(dim, dim);
            mode.sin_coeff = m.contains("sin") ? matrix(m["sin"], dim, mw + ".sin") : CMatrix::Zero(dim, dim);
            h.modes.push_back(std::move(mode));
        }
    }
    try {
        h.validate();
    } catch (const std::exception& e) {
        fail(where, e.what());
    }
    return h;
}

ModelSpec model(const json& j) {
    check_keys(j, "model", {"preset", "params", "fourier"});
    ModelSpec m;
    if (j.contains("fourier")) {
        if (j.contains("preset") || j.contains("params")) fail("model", "'fourier' excludes 'preset' and 'params'");
        m.fourier = fourier(j["fourier"], "model.fourier");
        return m;
    }
    if (!j.contains("preset") || !j["preset"].is_string()) fail("model", "need a 'preset' name or a 'fourier' form");
    m.preset = j["preset"].get<std::string>();
    if (j.contains("params")) {
        check_keys(j["params"], "model.params", {"lambda", "eta", "omega0", "gamma", "kappa", "chirp", "omega"});
        for (const auto& [key, value] : j["params"].items()) m.params[key] = number(value, "model.params." + key);
    }
    return m;
}

std::vector<double> grid(const json& j, const std::string& where) {
    std::vector<double> g;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) g.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
        return g;
    }
    check_keys(j, where, {"from", "to", "points"});
    if (!j.contains("from") || !j.contains("to")) fail(where, "need 'from' and 'to'");
    const double a = number(j["from"], where + ".from");
    const double b = number(j["to"], where + ".to");
    if (b < a) fail(where, "'to' is below 'from'");
    if (j.contains("points")) {
        const int n = integer(j["points"], where + ".points");
        if (n < 1) fail(where + ".points", "must be >= 1");
        if (n == 1) return {a};
        for (int i = 0; i < n; ++i) g.push_back(i == n - 1 ? b : a + (b - a) * i / (n - 1));
        return g;
    }
    for (int i = 0; a + i <= b + 1e-9; ++i) g.push_back(a + i);
    return g;
}

StateSpec state(const json& j, const std::string& where) {
    if (j.is_string()) return named_state(j.get<std::string>());
    check_keys(j, where, {"label", "amplitudes"});
    if (!j.contains("amplitudes") || !j["amplitudes"].is_array() || j["amplitudes"].empty())
        fail(where, "need a non-empty 'amplitudes' list");
    StateSpec s;
    s.label = j.contains("label") ? j["label"].get<std::string>() : "custom";
    const json& a = j["amplitudes"];
    StateVector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = complex_entry(a[i], where + ".amplitudes[" + std::to_string(i) + "]");
    if (!(v.norm() > 0.0)) fail(where, "amplitudes are all zero");
    s.amplitudes = v / v.norm();
    return s;
}

QuadratureConfig quadrature(const json& j) {
    check_keys(j, "quadrature", {"panels_per_period", "nodes_per_panel", "abs_tol", "max_refinements"});
    QuadratureConfig q;
    if (j.contains("panels_per_period")) q.panels_per_period = integer(j["panels_per_period"], "quadrature.panels_per_period");
    if (j.contains("nodes_per_panel")) q.nodes_per_panel = integer(j["nodes_per_panel"], "quadrature.nodes_per_panel");
    if (j.contains("abs_tol")) q.abs_tol = number(j["abs_tol"], "quadrature.abs_tol");
    if (j.contains("max_refinements")) q.max_refinements = integer(j["max_refinements"], "quadrature.max_refinements");
    return q;
}

PropagationConfig propagation(const json& j) {
    check_keys(j, "propagation", {"method", "rel_tol", "abs_tol", "max_step", "steps_per_period"});
    PropagationConfig p;
    if (j.contains("method")) {
        const std::string m = j["method"].is_string() ? j["method"].get<std::string>() : "";
        if (m == "rk4") p.method = PropagationMethod::rk4;
        else if (m == "dopri5") p.method = PropagationMethod::dopri5;
        else fail("propagation.method", "expected \"rk4\" or \"dopri5\"");
    }
    if (j.contains("rel_tol")) p.rel_tol = number(j["rel_tol"], "propagation.rel_tol");
    if (j.contains("abs_tol")) p.abs_tol = number(j["abs_tol"], "propagation.abs_tol");
    if (j.contains("max_step")) p.max_step = number(j["max_step"], "propagation.max_step");
    if (j.contains("steps_per_period")) p.steps_per_period = integer(j["steps_per_period"], "propagation.steps_per_period");
    return p;
}

PerturbativeFrame frame(const json& j) {
    const std::string f = j.is_string() ? j.get<std::string>() : "";
    if (f == "lab") return PerturbativeFrame::lab;
    if (f == "interaction") return PerturbativeFrame::interaction;
    fail("frame", "expected \"lab\" or \"interaction\"");
}

Engine engine(const json& j, const std::string& where) {
    const std::string e = j.is_string() ? j.get<std::string>() : "";
    if (e == "exact") return Engine::exact;
    if (e == "second_order") return Engine::second_order;
    if (e == "closed_form") return Engine::closed_form;
    fail(where, "expected \"exact\", \"second_order\" or \"closed_form\"");
}

json parse(const std::string& text) {
    try {
        json j = json::parse(text);
        if (!j.is_object()) fail("config", "top level must be an object");
        return j;
    } catch (const json::parse_error& e) {
        fail("config", e.what());
    }
}

template <class Spec>
void common(const json& j, Spec& spec) {
    if (!j.contains("model")) fail("config", "missing 'model'");
    spec.model = model(j["model"]);
    if (j.contains("omega0")) spec.omega0 = number(j["omega0"], "omega0");
    if (j.contains("frame")) spec.frame = frame(j["frame"]);
    if (j.contains("validity_threshold")) spec.thresholds.validity = number(j["validity_threshold"], "validity_threshold");
    if (j.contains("discrepancy_tolerance"))
        spec.thresholds.discrepancy = number(j["discrepancy_tolerance"], "discrepancy_tolerance");
    if (j.contains("quadrature")) spec.quadrature = quadrature(j["quadrature"]);
    if (j.contains("propagation")) spec.propagation = propagation(j["propagation"]);
}

const std::set<std::string> kCommonKeys = {"kind", "model", "omega0", "frame", "validity_threshold",
                                           "discrepancy_tolerance", "quadrature", "propagation"};

std::set<std::string> with_common(std::set<std::string> keys) {
    keys.insert(kCommonKeys.begin(), kCommonKeys.end());
    return keys;
}

void expect_kind(const json& j, const std::string& kind) {
    if (j.contains("kind") && j["kind"] != kind) fail("kind", "expected \"" + kind + "\"");
}

}  // namespace

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string config_kind(const std::string& text) {
    const json j = parse(text);
    if (!j.contains("kind") || !j["kind"].is_string()) fail("config", "missing 'kind'");
    return j["kind"].get<std::string>();
}

namespace {

SweepSpec sweep(const json& j) {
    check_keys(j, "config", with_common({"k", "t_obs", "states", "engines"}));
    expect_kind(j, "sweep");
    SweepSpec spec;
    common(j, spec);
    if (j.contains("k")) spec.k = grid(j["k"], "k");
    if (j.contains("t_obs")) spec.t_obs = number(j["t_obs"], "t_obs");
    if (j.contains("states")) {
        if (!j["states"].is_array()) fail("states", "expected a list");
        spec.states.clear();
        for (std::size_t i = 0; i < j["states"].size(); ++i)
            spec.states.push_back(state(j["states"][i], "states[" + std::to_string(i) + "]"));
    }
    if (j.contains("engines")) {
        if (!j["engines"].is_array()) fail("engines", "expected a list");
        spec.engines.clear();
        for (std::size_t i = 0; i < j["engines"].size(); ++i)
            spec.engines.push_back(engine(j["engines"][i], "engines[" + std::to_string(i) + "]"));
    }
    spec.validate();
    return spec;
}

DiscrepancyMapSpec discrepancy_map(const json& j) {
    check_keys(j, "config", with_common({"omega_ratios", "t", "state"}));
    expect_kind(j, "map");
    DiscrepancyMapSpec spec;
    common(j, spec);
    if (j.contains("omega_ratios")) spec.omega_ratios = grid(j["omega_ratios"], "omega_ratios");
    if (j.contains("t")) spec.t_grid = grid(j["t"], "t");
    if (j.contains("state")) spec.state = state(j["state"], "state");
    spec.validate();
    return spec;
}

}  // namespace

SweepSpec parse_sweep_config(const std::string& text) {
    try {
        return sweep(parse(text));
    } catch (const json::exception& e) {
        fail("config", e.what());
    }
}

DiscrepancyMapSpec parse_map_config(const std::string& text) {
    try {
        return discrepancy_map(parse(text));
    } catch (const json::exception& e) {
        fail("config", e.what());
    }
}

ParamMap parse_param_pairs(const std::vector<std::string>& pairs) {
    ParamMap params;
    for (const auto& p : pairs) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("parameter '" + p + "' is not key=value");
        const std::string key = p.substr(0, eq);
        const std::string text = p.substr(eq + 1);
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != text.size() || !std::isfinite(value))
            throw ConfigError("parameter '" + key + "' needs a finite number, got '" + text + "'");
        if (!params.emplace(key, value).second) throw ConfigError("parameter '" + key + "' given twice");
    }
    return params;
}

}  // namespace znh
