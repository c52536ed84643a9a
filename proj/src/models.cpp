#include "znh/models.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <set>
#include <utility>

namespace znh {

namespace {

void require_finite_param(const char* name, double v) {
    if (!std::isfinite(v)) throw DomainError(std::string("parameter ") + name + " must be finite");
}

void require_gamma(double gamma) {
    require_finite_param("gamma", gamma);
    if (gamma < 0.0) throw DomainError("parameter gamma must be >= 0");
}

std::optional<double> drive_frequency(const DriveProfile& drive) {
    // A constant or linear drive only enters polynomially in t.
    if (drive.kind() == DriveProfile::Kind::custom) return std::nullopt;
    return 0.0;
}

// Largest |[A, B]| relative to |A||B| over all pairs of samples.
double max_relative_commutator(const std::vector<CMatrix>& samples) {
    double worst = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const double scale = std::max(1.0, max_abs(samples[i]) * max_abs(samples[j]));
            worst = std::max(worst, max_abs(commutator(samples[i], samples[j])) / scale);
        }
    }
    return worst;
}

}  // namespace

// DriveProfile

DriveProfile DriveProfile::constant(double omega) {
    require_finite_param("omega", omega);
    DriveProfile d;
    d.kind_ = Kind::constant;
    d.omega0_ = omega;
    return d;
}

DriveProfile DriveProfile::linear(double omega0, double rate) {
    require_finite_param("omega", omega0);
    require_finite_param("chirp", rate);
    DriveProfile d;
    d.kind_ = Kind::linear;
    d.omega0_ = omega0;
    d.rate_ = rate;
    return d;
}

DriveProfile DriveProfile::custom(std::function<double(double)> omega) {
    if (!omega) throw ConfigError("DriveProfile::custom: empty function");
    DriveProfile d;
    d.kind_ = Kind::custom;
    d.custom_ = std::move(omega);
    return d;
}

double DriveProfile::operator()(double s) const {
    switch (kind_) {
        case Kind::constant: return omega0_;
        case Kind::linear: return omega0_ + rate_ * s;
        case Kind::custom: return custom_(s);
    }
    return 0.0;
}

double DriveProfile::phase(double t1, double t) const {
    switch (kind_) {
        case Kind::constant: return omega0_ * (t - t1);
        case Kind::linear: return omega0_ * (t - t1) + 0.5 * rate_ * (t * t - t1 * t1);
        case Kind::custom: return integrate_adaptive(custom_, t1, t, 1e-12);
    }
    return 0.0;
}

double DriveProfile::max_abs_on(double a, double b) const {
    switch (kind_) {
        case Kind::constant: return std::abs(omega0_);
        case Kind::linear: return std::max(std::abs((*this)(a)), std::abs((*this)(b)));
        case Kind::custom: {
            double m = 0.0;
            constexpr int samples = 1024;
            for (int i = 0; i <= samples; ++i) m = std::max(m, std::abs(custom_(a + (b - a) * i / samples)));
            return m;
        }
    }
    return 0.0;
}

// HamiltonianModel

HamiltonianModel::HamiltonianModel(std::string name, Eigen::Index dim, Evaluator evaluator,
                                   std::optional<double> max_frequency, ParamMap params,
                                   std::optional<DriveTerm> drive_term)
    : name_(std::move(name)),
      dim_(dim),
      evaluator_(std::move(evaluator)),
      max_frequency_(max_frequency),
      params_(std::move(params)),
      drive_term_(std::move(drive_term)) {
    if (dim_ <= 0) throw DimensionError("HamiltonianModel: dimension must be positive");
    if (!evaluator_) throw ConfigError("HamiltonianModel: empty evaluator");
    if (max_frequency_ && (!std::isfinite(*max_frequency_) || *max_frequency_ < 0.0))
        throw DomainError("HamiltonianModel: max_frequency must be finite and >= 0");
}

CMatrix HamiltonianModel::operator()(double t) const {
    if (!std::isfinite(t)) throw DomainError("evaluate: time must be finite");
    CMatrix h = evaluator_(t);
    if (h.rows() != dim_ || h.cols() != dim_)
        throw DimensionError("model " + name_ + " returned a matrix of the wrong size");
    return h;
}

CMatrix evaluate(const HamiltonianModel& model, double t) { return model(t); }

// FourierHamiltonian

void FourierHamiltonian::validate() const {
    require_square(static_term, "FourierHamiltonian static term");
    require_finite(static_term, "FourierHamiltonian static term");
    for (const auto& mode : modes) {
        require_same_dim(static_term, mode.cos_coeff, "FourierHamiltonian cos coefficient");
        require_same_dim(static_term, mode.sin_coeff, "FourierHamiltonian sin coefficient");
        require_finite(mode.cos_coeff, "FourierHamiltonian cos coefficient");
        require_finite(mode.sin_coeff, "FourierHamiltonian sin coefficient");
        if (!std::isfinite(mode.frequency) || mode.frequency < 0.0)
            throw DomainError("FourierHamiltonian: mode frequencies must be finite and >= 0");
    }
}

CMatrix FourierHamiltonian::operator()(double t) const {
    CMatrix h = static_term;
    for (const auto& mode : modes) {
        const double phase = mode.frequency * t;
        h += std::cos(phase) * mode.cos_coeff + std::sin(phase) * mode.sin_coeff;
    }
    return h;
}

double FourierHamiltonian::max_frequency() const {
    double m = 0.0;
    for (const auto& mode : modes) m = std::max(m, mode.frequency);
    return m;
}

FourierHamiltonian FourierHamiltonian::scaled_frequencies(double factor) const {
    FourierHamiltonian out = *this;
    for (auto& mode : out.modes) mode.frequency *= factor;
    return out;
}

HamiltonianModel FourierHamiltonian::to_model(std::string name) const {
    validate();
    auto self = std::make_shared<const FourierHamiltonian>(*this);
    return HamiltonianModel(std::move(name), dim(), [self](double t) { return (*self)(t); }, max_frequency());
}

// Presets

HamiltonianModel hermitian_xy(double lambda, double eta, double omega) {
    require_finite_param("lambda", lambda);
    require_finite_param("eta", eta);
    require_finite_param("omega", omega);
    const CMatrix sx = pauli::x();
    const CMatrix sy = pauli::y();
    auto h = [=](double t) -> CMatrix {
        return (lambda * eta * std::sin(omega * t)) * sx + (lambda * (1.0 - eta) * std::cos(omega * t)) * sy;
    };
    return HamiltonianModel("hermitian-xy", 2, h, std::abs(omega),
                            {{"lambda", lambda}, {"eta", eta}, {"omega", omega}});
}

namespace {

HamiltonianModel driven_qubit(std::string name, const DriveProfile& drive, double gamma, double kappa,
                              const CMatrix& decay_op, ParamMap params) {
    require_gamma(gamma);
    require_finite_param("kappa", kappa);
    const CMatrix sx = pauli::x();
    const CMatrix fixed = Complex(0.0, -0.5 * gamma) * decay_op + kappa * pauli::y();
    auto h = [=](double t) -> CMatrix { return (0.5 * drive(t)) * sx + fixed; };
    return HamiltonianModel(std::move(name), 2, h, drive_frequency(drive), std::move(params),
                            DriveTerm{drive, 0.5 * sx});
}

ParamMap drive_params(const DriveProfile& drive, double gamma, double kappa) {
    ParamMap p{{"gamma", gamma}, {"kappa", kappa}};
    if (drive.kind() != DriveProfile::Kind::custom) p["omega"] = drive(0.0);
    if (drive.kind() == DriveProfile::Kind::linear) p["chirp"] = drive(1.0) - drive(0.0);
    return p;
}

}  // namespace

HamiltonianModel decaying_qubit(const DriveProfile& drive, double gamma, double kappa) {
    return driven_qubit("decaying-qubit", drive, gamma, kappa, pauli::z() + pauli::identity(),
                        drive_params(drive, gamma, kappa));
}

HamiltonianModel gain_loss(const DriveProfile& drive, double gamma, double kappa) {
    return driven_qubit("gain-loss", drive, gamma, kappa, pauli::z(), drive_params(drive, gamma, kappa));
}

HamiltonianModel oscillating_decay(double omega0, double gamma, double omega) {
    require_finite_param("omega0", omega0);
    require_gamma(gamma);
    require_finite_param("omega", omega);
    const CMatrix hplus = (0.5 * omega0) * pauli::z();
    const CMatrix sx = pauli::x();
    auto h = [=](double t) -> CMatrix { return hplus + Complex(0.0, -0.5 * gamma * std::cos(omega * t)) * sx; };
    return HamiltonianModel("oscillating-decay", 2, h, std::abs(omega),
                            {{"omega0", omega0}, {"gamma", gamma}, {"omega", omega}});
}

const std::vector<PresetInfo>& preset_catalog() {
    static const std::vector<PresetInfo> catalog = {
        {"hermitian-xy", "H(t) = lambda*eta*sin(omega t) sx + lambda*(1-eta)*cos(omega t) sy",
         {"lambda", "eta", "omega"}},
        {"decaying-qubit", "H(t) = (omega(t)/2) sx - i(gamma/2)(sz + 1) + kappa sy",
         {"omega", "gamma", "kappa=0", "chirp=0"}},
        {"gain-loss", "H(t) = (omega(t)/2) sx - i(gamma/2) sz + kappa sy", {"omega", "gamma", "kappa=0", "chirp=0"}},
        {"oscillating-decay", "H(t) = (omega0/2) sz - i(gamma/2) cos(omega t) sx", {"omega0", "gamma", "omega"}},
    };
    return catalog;
}

HamiltonianModel make_preset(const std::string& name, const ParamMap& params) {
    const auto info = std::find_if(preset_catalog().begin(), preset_catalog().end(),
                                   [&](const PresetInfo& p) { return p.name == name; });
    if (info == preset_catalog().end()) throw ConfigError("unknown preset '" + name + "'");

    std::set<std::string> allowed;
    std::set<std::string> required;
    for (const auto& key : info->params) {
        const auto eq = key.find('=');
        allowed.insert(key.substr(0, eq));
        if (eq == std::string::npos) required.insert(key);
    }
    for (const auto& [key, value] : params) {
        if (!allowed.contains(key)) throw ConfigError("preset " + name + ": unknown parameter '" + key + "'");
    }
    for (const auto& key : required) {
        if (!params.contains(key)) throw ConfigError("preset " + name + ": missing parameter '" + key + "'");
    }
    const auto get = [&](const std::string& key, double fallback = 0.0) {
        const auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };

    if (name == "hermitian-xy") return hermitian_xy(get("lambda"), get("eta"), get("omega"));
    if (name == "oscillating-decay") return oscillating_decay(get("omega0"), get("gamma"), get("omega"));

    const double chirp = get("chirp");
    const DriveProfile drive =
        chirp == 0.0 ? DriveProfile::constant(get("omega")) : DriveProfile::linear(get("omega"), chirp);
    if (name == "decaying-qubit") return decaying_qubit(drive, get("gamma"), get("kappa"));
    return gain_loss(drive, get("gamma"), get("kappa"));
}

// InteractionFrame

InteractionFrame::InteractionFrame(HamiltonianModel base, std::function<CMatrix(double)> h0,
                                   std::optional<DriveTerm> drive, double t1, QuadratureConfig cfg)
    : base_(std::move(base)), h0_(std::move(h0)), drive_term_(std::move(drive)), t1_(t1), cfg_(cfg) {}

InteractionFrame InteractionFrame::for_drive(HamiltonianModel base, double t1) {
    if (!base.drive_term()) throw ConfigError("model " + base.name() + " has no drive term for a rotating frame");
    const DriveTerm term = *base.drive_term();
    if (!is_hermitian(term.generator, 1e-14)) throw FrameError("drive generator must be Hermitian");
    auto h0 = [term](double t) -> CMatrix { return term.drive(t) * term.generator; };
    return InteractionFrame(std::move(base), std::move(h0), term, t1, {});
}

InteractionFrame InteractionFrame::for_term(HamiltonianModel base, std::function<CMatrix(double)> h0, double t1,
                                            double horizon, const QuadratureConfig& cfg) {
    if (!h0) throw ConfigError("InteractionFrame: empty H0 term");
    if (!(horizon >= t1)) throw DomainError("InteractionFrame: horizon must be >= t1");
    constexpr int samples = 16;
    std::vector<CMatrix> grid;
    for (int i = 0; i <= samples; ++i) {
        CMatrix m = h0(t1 + (horizon - t1) * i / samples);
        if (m.rows() != base.dim() || m.cols() != base.dim())
            throw DimensionError("InteractionFrame: H0 dimension does not match the model");
        grid.push_back(std::move(m));
    }
    if (max_relative_commutator(grid) > 1e-12)
        throw FrameError("InteractionFrame: H0 does not commute with itself at different times");
    return InteractionFrame(std::move(base), std::move(h0), std::nullopt, t1, cfg);
}

CMatrix InteractionFrame::rotation(double t) const {
    const Eigen::Index n = base_.dim();
    if (drive_term_) {
        const double phase = drive_term_->drive.phase(t1_, t);
        const CMatrix& g = drive_term_->generator;
        const CMatrix g2 = g * g;
        const double c2 = g2(0, 0).real();
        // exp(-i phase G) = cos(phase c) - i sin(phase c) G/c when G^2 = c^2.
        if (c2 > 0.0 && max_abs(g2 - c2 * CMatrix::Identity(n, n)) <= 1e-14 * c2) {
            const double c = std::sqrt(c2);
            return std::cos(phase * c) * CMatrix::Identity(n, n) - kI * (std::sin(phase * c) / c) * g;
        }
        return expm(-kI * phase * g);
    }
    const CMatrix integral = integrate_matrix(h0_, t1_, t, cfg_);
    return expm(-kI * integral);
}

CMatrix to_interaction_picture(const InteractionFrame& frame, double t) {
    if (t < frame.t1()) throw DomainError("to_interaction_picture: t must be >= t1");
    const CMatrix u = frame.rotation(t);
    return u.adjoint() * (frame.base()(t) - frame.h0(t)) * u;
}

double phase_integral(const InteractionFrame& frame, double t) {
    if (!frame.drive_term()) throw ConfigError("phase_integral: frame has no scalar drive");
    if (t < frame.t1()) throw DomainError("phase_integral: t must be >= t1");
    return frame.drive_term()->drive.phase(frame.t1(), t);
}

std::vector<double> find_zero_integral_times(const InteractionFrame& frame, double horizon) {
    if (!frame.drive_term()) throw ConfigError("find_zero_integral_times: frame has no scalar drive");
    const double t1 = frame.t1();
    if (!(horizon > t1)) throw DomainError("find_zero_integral_times: horizon must exceed t1");
    const DriveProfile& drive = frame.drive_term()->drive;
    constexpr double kTolerance = 1e-10;
    constexpr int kPointsPerPeriod = 2000;

    const double span = horizon - t1;
    const double fastest = drive.max_abs_on(t1, horizon);
    double cells = kPointsPerPeriod;
    if (fastest > 0.0) cells = std::ceil(kPointsPerPeriod * span * fastest / (2.0 * std::numbers::pi));
    const auto n = static_cast<std::size_t>(std::clamp(cells, double(kPointsPerPeriod), 2e7));
    const double h = span / static_cast<double>(n);

    const auto& rule = gauss_legendre(8);
    const auto integrand = [&](double s) { return std::exp(kI * drive.phase(t1, s)); };
    const auto piece = [&](double a, double b) {
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        Complex acc = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * integrand(mid + half * rule.nodes[i]);
        return acc * half;
    };

    std::vector<Complex> cumulative(n + 1);
    cumulative[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = t1 + h * static_cast<double>(i);
        cumulative[i + 1] = cumulative[i] + piece(a, a + h);
    }
    const auto grid_time = [&](std::size_t i) { return i == n ? horizon : t1 + h * static_cast<double>(i); };

    // d|I|^2/dt = 2 Re(conj(I(t)) exp(i Omega(t)))
    const auto slope_from = [&](std::size_t i, double t) {
        const Complex value = cumulative[i] + piece(grid_time(i), t);
        return std::pair{value, 2.0 * std::real(std::conj(value) * integrand(t))};
    };

    std::vector<double> roots;
    const auto accept = [&](double t, Complex value) {
        if (std::abs(value) > kTolerance) return;
        if (!roots.empty() && std::abs(t - roots.back()) <= 1e-9 * std::max(1.0, std::abs(t))) return;
        roots.push_back(t);
    };

    for (std::size_t i = 1; i < n; ++i) {
        const double f_prev = std::norm(cumulative[i - 1]);
        const double f_here = std::norm(cumulative[i]);
        const double f_next = std::norm(cumulative[i + 1]);
        if (!(f_here < f_prev && f_here <= f_next)) continue;
        // bracket the stationary point of |I|^2 between grid nodes i-1 and i+1
        double lo = grid_time(i - 1);
        double hi = grid_time(i + 1);
        for (int iter = 0; iter < 200 && hi - lo > 4e-16 * std::max(1.0, std::abs(hi)); ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (slope_from(i - 1, mid).second < 0.0)
                lo = mid;
            else
                hi = mid;
        }
        const double t = 0.5 * (lo + hi);
        accept(t, slope_from(i - 1, t).first);
    }
    if (std::norm(cumulative[n]) < std::norm(cumulative[n - 1])) accept(horizon, cumulative[n]);
    return roots;
}

}  // namespace znh
