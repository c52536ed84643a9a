#include "znh/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "znh/perturbative.hpp"

namespace znh {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_drive_preset(const std::string& name) { return name == "decaying-qubit" || name == "gain-loss"; }

template <class F>
void parallel_for(std::size_t n, F&& body) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) body(i);
        });
    }
}

std::string fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json describe(const ModelSpec& m) {
    json j;
    if (m.fourier) {
        json modes = json::array();
        for (const auto& mode : m.fourier->modes) modes.push_back(mode.frequency);
        j["fourier"] = {{"dim", m.fourier->dim()}, {"frequencies", modes}};
    } else {
        j["preset"] = m.preset;
        j["params"] = m.params;
    }
    return j;
}

json describe(const QuadratureConfig& q) {
    return {{"panels_per_period", q.panels_per_period},
            {"nodes_per_panel", q.nodes_per_panel},
            {"abs_tol", q.abs_tol},
            {"max_refinements", q.max_refinements}};
}

json describe(const PropagationConfig& p) {
    json j = {{"method", p.method == PropagationMethod::rk4 ? "rk4" : "dopri5"},
              {"rel_tol", p.rel_tol},
              {"abs_tol", p.abs_tol},
              {"steps_per_period", p.steps_per_period}};
    if (p.max_step) j["max_step"] = *p.max_step;
    return j;
}

json describe(const StateSpec& s) {
    json amps = json::array();
    for (Eigen::Index i = 0; i < s.amplitudes.size(); ++i) amps.push_back({s.amplitudes(i).real(), s.amplitudes(i).imag()});
    return {{"label", s.label}, {"amplitudes", amps}};
}

HamiltonianModel rotating_frame_model(const HamiltonianModel& lab, double horizon) {
    auto frame = std::make_shared<InteractionFrame>(InteractionFrame::for_drive(lab, 0.0));
    const double w = frame->drive_term()->drive.max_abs_on(0.0, std::max(horizon, 0.0));
    return HamiltonianModel(
        lab.name() + "/rotating", lab.dim(), [frame](double t) { return to_interaction_picture(*frame, t); }, w,
        lab.params());
}

HamiltonianModel perturbative_model(const HamiltonianModel& lab, PerturbativeFrame frame, double horizon) {
    return frame == PerturbativeFrame::lab ? lab : rotating_frame_model(lab, horizon);
}

bool exceeds(const SurvivalBreakdown& b, const Thresholds& th) {
    return b.validity_warning || std::abs(1.0 - b.total) > th.validity;
}

void validate_common(const ModelSpec& model, double unit, PerturbativeFrame frame, const Thresholds& th,
                     const QuadratureConfig& q, const PropagationConfig& p) {
    model.validate();
    if (!std::isfinite(unit) || unit <= 0.0) throw ConfigError("omega0 must be finite and > 0");
    if (frame == PerturbativeFrame::interaction && !model.has_drive())
        throw ConfigError("the interaction frame needs a drive preset (decaying-qubit or gain-loss)");
    if (!(th.validity > 0.0) || !(th.discrepancy > 0.0)) throw ConfigError("thresholds must be > 0");
    q.validate();
    p.validate();
}

void validate_state(const StateSpec& s, Eigen::Index dim) {
    if (s.label.empty()) throw ConfigError("state label must not be empty");
    if (s.amplitudes.size() != dim)
        throw ConfigError("state '" + s.label + "' has " + std::to_string(s.amplitudes.size()) +
                          " amplitudes, model dim is " + std::to_string(dim));
    if (!s.amplitudes.allFinite() || std::abs(s.amplitudes.norm() - 1.0) > kNormTolerance)
        throw ConfigError("state '" + s.label + "' is not normalized");
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// ---- SVG helpers ----

struct Axis {
    double lo, hi;
    double pixel_lo, pixel_hi;
    double map(double v) const { return pixel_lo + (v - lo) / (hi - lo) * (pixel_hi - pixel_lo); }
};

std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
    const double span = hi - lo;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> ticks;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) ticks.push_back(v);
    return ticks;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::pair<double, double> padded(double lo, double hi) {
    if (!(hi > lo)) return {lo - 0.5, hi + 0.5};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

void draw_axes(std::ostringstream& svg, const Axis& x, const Axis& y, const std::string& xlabel,
               const std::string& ylabel) {
    svg << "<g stroke=\"#333\" stroke-width=\"1\" fill=\"none\">"
        << "<rect x=\"" << x.pixel_lo << "\" y=\"" << y.pixel_hi << "\" width=\"" << x.pixel_hi - x.pixel_lo
        << "\" height=\"" << y.pixel_lo - y.pixel_hi << "\"/></g>\n";
    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (double t : nice_ticks(x.lo, x.hi)) {
        const double px = x.map(t);
        svg << "<line x1=\"" << px << "\" y1=\"" << y.pixel_lo << "\" x2=\"" << px << "\" y2=\"" << y.pixel_lo + 4
            << "\" stroke=\"#333\"/><text x=\"" << px << "\" y=\"" << y.pixel_lo + 16
            << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
    }
    for (double t : nice_ticks(y.lo, y.hi)) {
        const double py = y.map(t);
        svg << "<line x1=\"" << x.pixel_lo - 4 << "\" y1=\"" << py << "\" x2=\"" << x.pixel_lo << "\" y2=\"" << py
            << "\" stroke=\"#333\"/><text x=\"" << x.pixel_lo - 7 << "\" y=\"" << py + 4
            << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
    }
    svg << "<text x=\"" << 0.5 * (x.pixel_lo + x.pixel_hi) << "\" y=\"" << y.pixel_lo + 34
        << "\" text-anchor=\"middle\" font-size=\"13\">" << xml_escape(xlabel) << "</text>\n";
    svg << "<text transform=\"translate(16," << 0.5 * (y.pixel_lo + y.pixel_hi)
        << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">" << xml_escape(ylabel) << "</text>\n";
    svg << "</g>\n";
}

// Perceptually ordered dark-blue to yellow ramp.
std::string ramp(double u) {
    static constexpr double stops[][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    u = std::clamp(std::isfinite(u) ? u : 0.0, 0.0, 1.0) * 4.0;
    const int i = std::min(3, static_cast<int>(u));
    const double f = u - i;
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                  static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                  static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
    return buf;
}

std::string svg_open(int width, int height) {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return s.str();
}

}  // namespace

// ---- models and states ----

std::string ModelSpec::label() const { return fourier ? "fourier" : preset; }

Eigen::Index ModelSpec::dim() const { return fourier ? fourier->dim() : 2; }

bool ModelSpec::has_drive() const { return !fourier && is_drive_preset(preset); }

HamiltonianModel ModelSpec::at_ratio(double k, double omega0) const {
    if (fourier) return fourier->scaled_frequencies(k).to_model("fourier");
    ParamMap p = params;
    p["omega"] = k * omega0;
    return make_preset(preset, p);
}

std::string ModelSpec::param_json(double k, double omega0) const {
    if (fourier) return json{{"dim", fourier->dim()}, {"modes", fourier->modes.size()}, {"scale", k}}.dump();
    json j = params;
    j["omega"] = k * omega0;
    return j.dump();
}

void ModelSpec::validate() const {
    if (fourier) {
        if (!preset.empty()) throw ConfigError("model: give either a preset or a Fourier form, not both");
        fourier->validate();
        return;
    }
    if (preset.empty()) throw ConfigError("model: preset name missing");
    if (params.contains("omega")) throw ConfigError("model: 'omega' is swept and must not be fixed");
    (void)at_ratio(1.0, 1.0);
}

StateSpec named_state(const std::string& name) {
    static const std::map<std::string, StateVector (*)()> table = {
        {"plus", ket::plus},       {"minus", ket::minus},     {"plus_x", ket::plus_x},
        {"minus_x", ket::minus_x}, {"plus_y", ket::plus_y},   {"minus_y", ket::minus_y}};
    const auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown state '" + name + "'");
    return {name, it->second()};
}

const char* engine_name(Engine e) {
    switch (e) {
        case Engine::exact: return "exact";
        case Engine::second_order: return "second_order";
        case Engine::closed_form: return "closed_form";
    }
    return "?";
}

unsigned worker_count() {
    if (const char* env = std::getenv("ZNH_THREADS"); env && *env) {
        unsigned n = 0;
        const auto [end, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), n);
        if (ec != std::errc{} || *end != '\0' || n == 0) throw ConfigError("ZNH_THREADS must be a positive integer");
        return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    out.close();
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

// ---- sweep ----

std::vector<double> SweepSpec::default_k() {
    std::vector<double> k;
    for (int i = 1; i <= 30; ++i) k.push_back(i);
    return k;
}

double SweepSpec::unit() const {
    if (omega0) return *omega0;
    const auto it = model.params.find("omega0");
    return (!model.fourier && it != model.params.end()) ? it->second : 1.0;
}

double SweepSpec::observation_time() const { return t_obs.value_or(kTwoPi / unit()); }

void SweepSpec::validate() const {
    validate_common(model, unit(), frame, thresholds, quadrature, propagation);
    if (k.empty()) throw ConfigError("sweep: k range is empty");
    for (double v : k)
        if (!std::isfinite(v) || v < 0.0) throw ConfigError("sweep: k values must be finite and >= 0");
    const double t = observation_time();
    if (!std::isfinite(t) || t <= 0.0) throw ConfigError("sweep: t_obs must be > 0");
    if (states.empty()) throw ConfigError("sweep: no initial states");
    for (const auto& s : states) validate_state(s, model.dim());
    if (engines.empty()) throw ConfigError("sweep: no engines");
    if (std::set<Engine>(engines.begin(), engines.end()).size() != engines.size())
        throw ConfigError("sweep: duplicate engine");
    if (std::ranges::find(engines, Engine::closed_form) != engines.end() &&
        (model.fourier || model.preset != "oscillating-decay"))
        throw ConfigError("sweep: the closed_form engine exists only for oscillating-decay");
}

bool SweepResult::failed() const {
    return std::ranges::any_of(rows, [](const SweepRow& r) { return !r.errors.empty(); });
}

SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    const double unit = spec.unit();
    const double t = spec.observation_time();

    std::vector<double> ks = spec.k;
    std::ranges::sort(ks);
    std::vector<StateSpec> states = spec.states;
    std::ranges::stable_sort(states, {}, &StateSpec::label);
    const auto has = [&](Engine e) { return std::ranges::find(spec.engines, e) != spec.engines.end(); };

    SweepResult result;
    result.model = spec.model.label();
    result.engines = spec.engines;
    result.rows.resize(ks.size() * states.size());

    json cfg = {{"kind", "sweep"},
                {"model", describe(spec.model)},
                {"omega0", unit},
                {"k", ks},
                {"t_obs", t},
                {"frame", spec.frame == PerturbativeFrame::lab ? "lab" : "interaction"},
                {"validity_threshold", spec.thresholds.validity},
                {"discrepancy_tolerance", spec.thresholds.discrepancy},
                {"quadrature", describe(spec.quadrature)},
                {"propagation", describe(spec.propagation)}};
    for (const auto& s : states) cfg["states"].push_back(describe(s));
    for (Engine e : spec.engines) cfg["engines"].push_back(engine_name(e));
    result.config_hash = fnv1a(cfg.dump());

    parallel_for(result.rows.size(), [&](std::size_t idx) {
        const double k = ks[idx / states.size()];
        const StateSpec& state = states[idx % states.size()];
        SweepRow& row = result.rows[idx];
        row.k = k;
        row.state = state.label;
        row.t = t;
        row.param_json = spec.model.param_json(k, unit);
        const auto record = [&](Engine e, const std::exception& ex) {
            row.errors.push_back(std::string(engine_name(e)) + ": " + ex.what());
        };

        std::optional<HamiltonianModel> model;
        try {
            model = spec.model.at_ratio(k, unit);
        } catch (const std::exception& ex) {
            for (Engine e : spec.engines) record(e, ex);
            return;
        }
        if (has(Engine::exact)) {
            try {
                row.exact = survival_exact(*model, state.amplitudes, 0.0, t, spec.propagation);
            } catch (const std::exception& ex) {
                record(Engine::exact, ex);
            }
        }
        if (has(Engine::second_order)) {
            try {
                const auto b = survival_second_order(perturbative_model(*model, spec.frame, t), state.amplitudes, 0.0, t,
                                                     spec.quadrature);
                row.second_order = b.total;
                row.flagged = exceeds(b, spec.thresholds);
            } catch (const std::exception& ex) {
                record(Engine::second_order, ex);
            }
        }
        if (has(Engine::closed_form)) {
            try {
                const OscillatingDecayParams p{spec.model.params.at("omega0"), spec.model.params.at("gamma"), k * unit};
                row.closed_form = survival_oscillating_decay_closed_form(p, state.amplitudes, t);
            } catch (const std::exception& ex) {
                record(Engine::closed_form, ex);
            }
        }
        if (row.exact && row.second_order) {
            row.discrepancy = std::abs(*row.exact - *row.second_order);
            if (*row.discrepancy > spec.thresholds.discrepancy) row.flagged = true;
        }
    });
    return result;
}

std::string to_csv(const SweepResult& result) {
    std::string out = std::string(kCsvHeader) + "\n";
    const bool with_discrepancy =
        std::ranges::find(result.engines, Engine::exact) != result.engines.end() &&
        std::ranges::find(result.engines, Engine::second_order) != result.engines.end();
    for (const auto& row : result.rows) {
        const auto line = [&](const std::string& engine, const std::optional<double>& value) {
            out += csv_field(result.model) + ',' + csv_field(row.param_json) + ',' + csv_field(row.state) + ',' + engine +
                   ',' + format_double(row.k) + ',' + format_double(row.t) + ',' +
                   (value ? format_double(*value) : std::string()) + ',' +
                   (!value ? "error" : row.flagged ? "invalid" : "ok") + '\n';
        };
        for (Engine e : result.engines) {
            switch (e) {
                case Engine::exact: line("exact", row.exact); break;
                case Engine::second_order: line("second_order", row.second_order); break;
                case Engine::closed_form: line("closed_form", row.closed_form); break;
            }
        }
        if (with_discrepancy) line("discrepancy", row.discrepancy);
    }
    return out;
}

std::string metadata_json(const SweepResult& result) {
    json rows_with_errors = json::array();
    for (const auto& row : result.rows)
        for (const auto& e : row.errors) rows_with_errors.push_back({{"k", row.k}, {"state", row.state}, {"error", e}});
    json engines = json::array();
    for (Engine e : result.engines) engines.push_back(engine_name(e));
    return json{{"kind", "sweep"},
                {"model", result.model},
                {"engines", engines},
                {"rows", result.rows.size()},
                {"config_hash", result.config_hash},
                {"tool_version", kToolVersion},
                {"errors", rows_with_errors}}
               .dump(2) +
           "\n";
}

std::string to_svg(const SweepResult& result) {
    constexpr int width = 760, height = 460;
    struct Series {
        std::string name;
        std::vector<std::pair<double, double>> points;
    };
    std::vector<Series> series;
    std::vector<std::string> state_order;
    for (const auto& row : result.rows)
        if (std::ranges::find(state_order, row.state) == state_order.end()) state_order.push_back(row.state);
    for (Engine e : result.engines) {
        for (const auto& state : state_order) {
            Series s{state + " / " + engine_name(e), {}};
            for (const auto& row : result.rows) {
                if (row.state != state) continue;
                const auto& v = e == Engine::exact ? row.exact : e == Engine::second_order ? row.second_order : row.closed_form;
                if (v && std::isfinite(*v)) s.points.emplace_back(row.k, *v);
            }
            series.push_back(std::move(s));
        }
    }

    double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    bool first = true;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (first) {
                xlo = xhi = x;
                ylo = yhi = y;
                first = false;
            }
            xlo = std::min(xlo, x), xhi = std::max(xhi, x), ylo = std::min(ylo, y), yhi = std::max(yhi, y);
        }
    }
    const auto [x0, x1] = padded(xlo, xhi);
    const auto [y0, y1] = padded(ylo, yhi);
    const Axis xa{x0, x1, 70.0, width - 200.0};
    const Axis ya{y0, y1, height - 50.0, 20.0};

    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                              "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    std::ostringstream svg;
    svg << svg_open(width, height);
    draw_axes(svg, xa, ya, "k = omega / omega0", "survival probability");
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = palette[i % std::size(palette)];
        svg << "<g fill=\"" << color << "\">\n";
        for (const auto& [x, y] : series[i].points)
            svg << "<circle cx=\"" << xa.map(x) << "\" cy=\"" << ya.map(y) << "\" r=\"3\"/>\n";
        svg << "</g>\n";
        const double ly = 30.0 + 18.0 * static_cast<double>(i);
        svg << "<circle cx=\"" << width - 185 << "\" cy=\"" << ly - 4 << "\" r=\"4\" fill=\"" << color
            << "\"/><text x=\"" << width - 175 << "\" y=\"" << ly
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(series[i].name) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

// ---- discrepancy map ----

std::vector<double> DiscrepancyMapSpec::default_ratios() {
    std::vector<double> r;
    for (int i = 0; i < 59; ++i) r.push_back(1.0 + 0.5 * i);
    return r;
}

std::vector<double> DiscrepancyMapSpec::default_t_grid() {
    std::vector<double> t;
    for (int i = 0; i <= 100; ++i) t.push_back(kTwoPi * i / 100.0);
    return t;
}

double DiscrepancyMapSpec::unit() const {
    if (omega0) return *omega0;
    const auto it = model.params.find("omega0");
    return (!model.fourier && it != model.params.end()) ? it->second : 1.0;
}

void DiscrepancyMapSpec::validate() const {
    validate_common(model, unit(), frame, thresholds, quadrature, propagation);
    if (omega_ratios.empty() || t_grid.empty()) throw ConfigError("map: grids must be non-empty");
    const auto monotone = [](const std::vector<double>& g) {
        return std::ranges::all_of(g, [](double v) { return std::isfinite(v) && v >= 0.0; }) &&
               std::ranges::adjacent_find(g, std::greater_equal<>{}) == g.end();
    };
    if (!monotone(omega_ratios)) throw ConfigError("map: omega ratios must be finite, >= 0 and strictly increasing");
    if (!monotone(t_grid)) throw ConfigError("map: t grid must be finite, >= 0 and strictly increasing");
    validate_state(state, model.dim());
}

bool DiscrepancyMap::failed() const {
    return std::ranges::any_of(cells, [](const MapCell& c) { return !c.error.empty(); });
}

double DiscrepancyMap::max_value(double min_ratio) const {
    double m = 0.0;
    for (const auto& c : cells)
        if (c.ratio >= min_ratio && c.value) m = std::max(m, *c.value);
    return m;
}

DiscrepancyMap run_discrepancy_map(const DiscrepancyMapSpec& spec) {
    spec.validate();
    const double unit = spec.unit();
    DiscrepancyMap map;
    map.model = spec.model.label();
    map.state = spec.state.label;
    map.ratios = spec.omega_ratios;
    for (double t : spec.t_grid) map.times.push_back(t / unit);
    const std::size_t nt = map.times.size();
    map.cells.resize(map.ratios.size() * nt);

    json cfg = {{"kind", "map"},
                {"model", describe(spec.model)},
                {"omega0", unit},
                {"omega_ratios", spec.omega_ratios},
                {"t", spec.t_grid},
                {"state", describe(spec.state)},
                {"frame", spec.frame == PerturbativeFrame::lab ? "lab" : "interaction"},
                {"validity_threshold", spec.thresholds.validity},
                {"discrepancy_tolerance", spec.thresholds.discrepancy},
                {"quadrature", describe(spec.quadrature)},
                {"propagation", describe(spec.propagation)}};
    map.config_hash = fnv1a(cfg.dump());

    parallel_for(map.ratios.size(), [&](std::size_t i) {
        const double ratio = map.ratios[i];
        MapCell* row = &map.cells[i * nt];
        const std::string params = spec.model.param_json(ratio, unit);
        for (std::size_t j = 0; j < nt; ++j) {
            row[j].ratio = ratio;
            row[j].t = map.times[j];
            row[j].param_json = params;
        }
        const auto fail_from = [&](std::size_t j, const std::exception& ex) {
            for (; j < nt; ++j)
                if (row[j].error.empty()) row[j].error = ex.what();
        };
        try {
            const HamiltonianModel lab = spec.model.at_ratio(ratio, unit);
            const HamiltonianModel pert = perturbative_model(lab, spec.frame, map.times.back());
            const StateVector& psi0 = spec.state.amplitudes;
            const auto second = survival_second_order_series(pert, psi0, 0.0, map.times, spec.quadrature);
            StateVector psi = psi0;
            double t_prev = 0.0;
            for (std::size_t j = 0; j < nt; ++j) {
                // the exact state is carried forward cell to cell; a failure poisons the rest of the row
                try {
                    psi = advance(lab, psi, t_prev, map.times[j], spec.propagation);
                    t_prev = map.times[j];
                } catch (const std::exception& ex) {
                    fail_from(j, ex);
                    return;
                }
                row[j].value = std::abs(std::norm(psi0.dot(psi)) - second[j].total);
                row[j].flagged = exceeds(second[j], spec.thresholds) || *row[j].value > spec.thresholds.discrepancy;
            }
        } catch (const std::exception& ex) {
            fail_from(0, ex);
        }
    });
    return map;
}

std::string to_csv(const DiscrepancyMap& map) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& c : map.cells) {
        out += csv_field(map.model) + ',' + csv_field(c.param_json) + ',' + csv_field(map.state) + ",discrepancy," +
               format_double(c.ratio) + ',' + format_double(c.t) + ',' +
               (c.value ? format_double(*c.value) : std::string()) + ',' +
               (!c.value ? "error" : c.flagged ? "invalid" : "ok") + '\n';
    }
    return out;
}

std::string metadata_json(const DiscrepancyMap& map) {
    json errors = json::array();
    for (const auto& c : map.cells)
        if (!c.error.empty()) errors.push_back({{"omega_ratio", c.ratio}, {"t", c.t}, {"error", c.error}});
    return json{{"kind", "map"},
                {"model", map.model},
                {"state", map.state},
                {"omega_ratios", map.ratios.size()},
                {"times", map.times.size()},
                {"max_discrepancy", map.max_value()},
                {"config_hash", map.config_hash},
                {"tool_version", kToolVersion},
                {"errors", errors}}
               .dump(2) +
           "\n";
}

std::string to_svg(const DiscrepancyMap& map) {
    constexpr int width = 760, height = 480;
    std::ostringstream svg;
    svg << svg_open(width, height);
    if (map.ratios.empty() || map.times.empty()) {
        svg << "</svg>\n";
        return svg.str();
    }
    // cell edges halfway between grid points
    const auto edges = [](const std::vector<double>& g) {
        std::vector<double> e(g.size() + 1);
        for (std::size_t i = 1; i < g.size(); ++i) e[i] = 0.5 * (g[i - 1] + g[i]);
        const double half = g.size() > 1 ? 0.5 * (g[1] - g[0]) : 0.5;
        const double half_end = g.size() > 1 ? 0.5 * (g.back() - g[g.size() - 2]) : 0.5;
        e.front() = g.front() - half;
        e.back() = g.back() + half_end;
        return e;
    };
    const auto xe = edges(map.ratios);
    const auto ye = edges(map.times);
    const Axis xa{xe.front(), xe.back(), 70.0, width - 130.0};
    const Axis ya{ye.front(), ye.back(), height - 50.0, 20.0};
    const double vmax = map.max_value();
    const std::size_t nt = map.times.size();
    for (std::size_t i = 0; i < map.ratios.size(); ++i) {
        for (std::size_t j = 0; j < nt; ++j) {
            const auto& c = map.cells[i * nt + j];
            const std::string fill = c.value ? ramp(vmax > 0.0 ? *c.value / vmax : 0.0) : std::string("#ff00ff");
            const double x = xa.map(xe[i]);
            const double y = ya.map(ye[j + 1]);
            svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << xa.map(xe[i + 1]) - x + 0.3
                << "\" height=\"" << ya.map(ye[j]) - y + 0.3 << "\" fill=\"" << fill << "\"/>\n";
        }
    }
    draw_axes(svg, xa, ya, "omega / omega0", "t");
    const double bx = width - 100.0;
    for (int s = 0; s < 50; ++s) {
        const double u0 = s / 50.0;
        const double y = ya.pixel_lo - (s + 1) * (ya.pixel_lo - ya.pixel_hi) / 50.0;
        svg << "<rect x=\"" << bx << "\" y=\"" << y << "\" width=\"16\" height=\""
            << (ya.pixel_lo - ya.pixel_hi) / 50.0 + 0.3 << "\" fill=\"" << ramp(u0 + 0.01) << "\"/>\n";
    }
    svg << "<g font-family=\"sans-serif\" font-size=\"11\"><text x=\"" << bx + 20 << "\" y=\"" << ya.pixel_lo
        << "\">0</text><text x=\"" << bx + 20 << "\" y=\"" << ya.pixel_hi + 10 << "\">" << tick_label(vmax)
        << "</text><text x=\"" << bx - 4 << "\" y=\"" << ya.pixel_hi - 6 << "\">|P - P2|</text></g>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace znh
