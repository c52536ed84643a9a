#pragma once

// Frequency sweeps and discrepancy maps comparing the exact propagator with the
// second-order survival formula, plus CSV/SVG emitters.

#include <optional>
#include <string>
#include <vector>

#include "znh/models.hpp"
#include "znh/propagator.hpp"
#include "znh/quadrature.hpp"

namespace znh {

inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr const char* kCsvHeader = "model,param_json,state,engine,k,t,value,flag";

/// Either a preset with fixed parameters or an explicit Fourier form. The
/// frequency ratio k sets the preset's "omega" to k * omega0; Fourier mode
/// frequencies are multiplied by k.
struct ModelSpec {
    std::string preset;
    ParamMap params;
    std::optional<FourierHamiltonian> fourier;

    std::string label() const;
    Eigen::Index dim() const;
    bool has_drive() const;
    HamiltonianModel at_ratio(double k, double omega0) const;
    /// Compact JSON of the parameters in effect at ratio k, keys sorted.
    std::string param_json(double k, double omega0) const;
    void validate() const;
};

struct StateSpec {
    std::string label;
    StateVector amplitudes;
};

/// plus, minus, plus_x, minus_x, plus_y, minus_y.
StateSpec named_state(const std::string& name);

enum class Engine { exact, second_order, closed_form };
const char* engine_name(Engine e);

/// Frame in which the second-order formula is evaluated. The rotating frame of
/// the drive gives the lab survival whenever the accumulated phase is a
/// multiple of 2 pi, which holds at integer k and t = 2 pi / omega0.
enum class PerturbativeFrame { lab, interaction };

struct Thresholds {
    /// Flag a point when |1 - P_2| exceeds this.
    double validity = 0.5;
    /// Flag a point when |P_exact - P_2| exceeds this.
    double discrepancy = 0.05;
};

struct SweepSpec {
    ModelSpec model;
    /// Unit of frequency; defaults to the model's omega0 parameter, else 1.
    std::optional<double> omega0;
    std::vector<double> k = default_k();
    /// Defaults to 2 pi / omega0.
    std::optional<double> t_obs;
    std::vector<StateSpec> states{named_state("plus"), named_state("plus_y")};
    std::vector<Engine> engines{Engine::exact, Engine::second_order};
    PerturbativeFrame frame = PerturbativeFrame::lab;
    Thresholds thresholds;
    QuadratureConfig quadrature;
    PropagationConfig propagation;

    static std::vector<double> default_k();
    double unit() const;
    double observation_time() const;
    void validate() const;
};

struct SweepRow {
    double k = 0.0;
    std::string state;
    double t = 0.0;
    std::string param_json;
    std::optional<double> exact;
    std::optional<double> second_order;
    std::optional<double> closed_form;
    /// |P_exact - P_2| when both ran.
    std::optional<double> discrepancy;
    bool flagged = false;
    std::vector<std::string> errors;
};

struct SweepResult {
    std::string model;
    std::vector<Engine> engines;
    std::vector<SweepRow> rows;
    std::string config_hash;

    bool failed() const;
};

/// Rows ordered by (k, state label). Engine failures are recorded in the row.
SweepResult run_sweep(const SweepSpec& spec);

struct DiscrepancyMapSpec {
    ModelSpec model;
    std::optional<double> omega0;
    std::vector<double> omega_ratios = default_ratios();
    /// In units of 1/omega0.
    std::vector<double> t_grid = default_t_grid();
    StateSpec state = named_state("plus");
    PerturbativeFrame frame = PerturbativeFrame::lab;
    Thresholds thresholds;
    QuadratureConfig quadrature;
    PropagationConfig propagation;

    static std::vector<double> default_ratios();
    static std::vector<double> default_t_grid();
    double unit() const;
    void validate() const;
};

struct MapCell {
    double ratio = 0.0;
    double t = 0.0;
    std::string param_json;
    std::optional<double> value;
    bool flagged = false;
    std::string error;
};

struct DiscrepancyMap {
    std::string model;
    std::string state;
    std::vector<double> ratios;
    std::vector<double> times;
    /// Ratio-major: cells[i * times.size() + j].
    std::vector<MapCell> cells;
    std::string config_hash;

    bool failed() const;
    /// Largest discrepancy over cells with ratio >= min_ratio.
    double max_value(double min_ratio = 0.0) const;
};

DiscrepancyMap run_discrepancy_map(const DiscrepancyMapSpec& spec);

/// Number of worker threads: ZNH_THREADS if set, else hardware concurrency.
unsigned worker_count();

std::string to_csv(const SweepResult& result);
std::string to_csv(const DiscrepancyMap& map);
std::string to_svg(const SweepResult& result);
std::string to_svg(const DiscrepancyMap& map);
std::string metadata_json(const SweepResult& result);
std::string metadata_json(const DiscrepancyMap& map);

/// Writes text to path; std::runtime_error naming the path on failure.
void write_text(const std::string& path, const std::string& text);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

}  // namespace znh
