#include "znh/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <type_traits>

namespace znh {

namespace {

// Successive estimates that agree to this relative level are converged even if
// abs_tol is below the rounding noise of the sum.
constexpr double kRoundoffFloor = 256.0 * std::numeric_limits<double>::epsilon();

GaussLegendreRule build_rule(int n) {
    GaussLegendreRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Newton iteration from the Chebyshev-like initial guess; roots come
        // out descending so they are stored mirrored.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        {
            // recompute derivative at the converged node for the weight
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
        }
        const auto idx = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[idx] = x;
        rule.weights[idx] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

// Integral of f over [a, b] with one Gauss-Legendre panel.
template <class F>
auto panel(const F& f, double a, double b, const GaussLegendreRule& rule) {
    using Result = std::decay_t<decltype(f(a))>;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    Result acc = f(mid + half * rule.nodes[0]) * rule.weights[0];
    for (std::size_t i = 1; i < rule.nodes.size(); ++i) acc += f(mid + half * rule.nodes[i]) * rule.weights[i];
    return Result(acc * half);
}

// Doubles the panel count until two successive estimates agree.
template <class Estimate>
MatrixIntegral refine(const Estimate& estimate, int panels, const QuadratureConfig& cfg, const char* what) {
    CMatrix coarse = estimate(panels);
    double err = std::numeric_limits<double>::infinity();
    for (int level = 0; level < cfg.max_refinements; ++level) {
        panels *= 2;
        CMatrix fine = estimate(panels);
        if (!fine.allFinite())
            throw QuadratureError(std::string(what) + ": integrand produced non-finite values", fine, err);
        err = max_abs(fine - coarse);
        const double floor = kRoundoffFloor * std::max(1.0, max_abs(fine));
        if (err < cfg.abs_tol || err <= floor) return {std::move(fine), err, panels};
        coarse = std::move(fine);
    }
    throw QuadratureError(std::string(what) + ": no convergence after " + std::to_string(cfg.max_refinements) +
                              " refinements (last change " + std::to_string(err) + ")",
                          coarse, err);
}

// S(i, j) = integral over [-1, x_i] of the j-th Lagrange basis polynomial on
// the Gauss nodes x; integrates the node interpolant up to each node.
const CMatrix& spectral_integration(int order) {
    static std::mutex mutex;
    static std::map<int, CMatrix> cache;
    const auto& rule = gauss_legendre(order);
    std::lock_guard lock(mutex);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;
    const auto& x = rule.nodes;
    const auto lagrange = [&](int j, double y) {
        double p = 1.0;
        for (int k = 0; k < order; ++k)
            if (k != j) p *= (y - x[k]) / (x[j] - x[k]);
        return p;
    };
    CMatrix s(order, order);
    for (int i = 0; i < order; ++i) {
        const double half = 0.5 * (x[i] + 1.0);
        const double mid = 0.5 * (x[i] - 1.0);
        for (int j = 0; j < order; ++j) {
            double acc = 0.0;
            for (int k = 0; k < order; ++k) acc += rule.weights[k] * lagrange(j, mid + half * x[k]);
            s(i, j) = acc * half;
        }
    }
    return cache.emplace(order, std::move(s)).first->second;
}

void check_interval(double t1, double t2, const char* what) {
    if (!std::isfinite(t1) || !std::isfinite(t2) || t2 < t1)
        throw DomainError(std::string(what) + ": need finite t1 <= t2");
}

}  // namespace

void QuadratureConfig::validate() const {
    if (panels_per_period < 1) throw ConfigError("quadrature: panels_per_period must be >= 1");
    if (nodes_per_panel < 2 || nodes_per_panel > 64) throw ConfigError("quadrature: nodes_per_panel must be in [2, 64]");
    if (!(abs_tol > 0.0)) throw ConfigError("quadrature: abs_tol must be > 0");
    if (max_refinements < 1) throw ConfigError("quadrature: max_refinements must be >= 1");
}

const GaussLegendreRule& gauss_legendre(int order) {
    if (order < 2 || order > 64) throw DomainError("gauss_legendre: order must be in [2, 64]");
    static std::mutex mutex;
    static std::map<int, GaussLegendreRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, build_rule(order)).first;
    return it->second;
}

int initial_panels(double t1, double t2, std::optional<double> max_frequency, const QuadratureConfig& cfg) {
    if (!max_frequency) return kUnknownFrequencyPanels;
    const double periods = (t2 - t1) * std::abs(*max_frequency) / (2.0 * std::numbers::pi);
    const double panels = std::ceil(periods * cfg.panels_per_period);
    return static_cast<int>(std::clamp(panels, 1.0, 1e6));
}

CMatrix composite_matrix(const MatrixFunction& f, double t1, double t2, int panels, int order) {
    const auto& rule = gauss_legendre(order);
    const double h = (t2 - t1) / panels;
    CMatrix sum = panel(f, t1, t1 + h, rule);
    for (int j = 1; j < panels; ++j) sum += panel(f, t1 + j * h, t1 + (j + 1) * h, rule);
    return sum;
}

MatrixIntegral integrate_matrix_estimate(const MatrixFunction& f, double t1, double t2, const QuadratureConfig& cfg,
                                         std::optional<double> max_frequency) {
    cfg.validate();
    check_interval(t1, t2, "integrate_matrix");
    if (t1 == t2) {
        const CMatrix probe = f(t1);
        return {CMatrix::Zero(probe.rows(), probe.cols()), 0.0, 0};
    }
    const auto estimate = [&](int panels) { return composite_matrix(f, t1, t2, panels, cfg.nodes_per_panel); };
    return refine(estimate, initial_panels(t1, t2, max_frequency, cfg), cfg, "integrate_matrix");
}

CMatrix integrate_matrix(const MatrixFunction& f, double t1, double t2, const QuadratureConfig& cfg,
                         std::optional<double> max_frequency) {
    return integrate_matrix_estimate(f, t1, t2, cfg, max_frequency).value;
}

Complex integrate_double_scalar(const ScalarFunction2& g, double t1, double t2, const QuadratureConfig& cfg,
                                std::optional<double> max_frequency) {
    cfg.validate();
    check_interval(t1, t2, "integrate_double_scalar");
    if (t1 == t2) return 0.0;
    const auto& rule = gauss_legendre(cfg.nodes_per_panel);
    const auto estimate = [&](int panels) {
        const double h = (t2 - t1) / panels;
        Complex total = 0.0;
        for (int k = 0; k < panels; ++k) {
            const double a = t1 + k * h;
            const auto outer = [&](double s) {
                const auto inner = [&](double sp) { return g(s, sp); };
                Complex acc = 0.0;
                for (int j = 0; j < k; ++j) acc += panel(inner, t1 + j * h, t1 + (j + 1) * h, rule);
                return acc + panel(inner, a, s, rule);
            };
            total += panel(outer, a, a + h, rule);
        }
        CMatrix m(1, 1);
        m(0, 0) = total;
        return m;
    };
    return refine(estimate, initial_panels(t1, t2, max_frequency, cfg), cfg, "integrate_double_scalar").value(0, 0);
}

MatrixIntegral integrate_nested(const MatrixFunction& inner, const NestedOuter& outer, double t1, double t2,
                                const QuadratureConfig& cfg, std::optional<double> max_frequency) {
    cfg.validate();
    check_interval(t1, t2, "integrate_nested");
    if (t1 == t2) {
        const CMatrix k0 = inner(t1);
        const CMatrix probe = outer(t1, CMatrix::Zero(k0.rows(), k0.cols()));
        return {CMatrix::Zero(probe.rows(), probe.cols()), 0.0, 0};
    }
    const auto& rule = gauss_legendre(cfg.nodes_per_panel);
    const auto estimate = [&](int panels) {
        const double h = (t2 - t1) / panels;
        CMatrix prefix;  // integral of inner over [t1, a_k]
        CMatrix total;
        for (int k = 0; k < panels; ++k) {
            const double a = t1 + k * h;
            const auto integrand = [&](double s) -> CMatrix {
                CMatrix partial = panel(inner, a, s, rule);
                if (k > 0) partial += prefix;
                return outer(s, partial);
            };
            CMatrix contrib = panel(integrand, a, a + h, rule);
            if (k == 0) {
                total = std::move(contrib);
                prefix = panel(inner, a, a + h, rule);
            } else {
                total += contrib;
                prefix += panel(inner, a, a + h, rule);
            }
        }
        return total;
    };
    return refine(estimate, initial_panels(t1, t2, max_frequency, cfg), cfg, "integrate_nested");
}

Complex cross_term(const MatrixFunction& hplus, const MatrixFunction& hminus, const StateVector& psi, double t1,
                   double t2, const QuadratureConfig& cfg, std::optional<double> max_frequency) {
    const CMatrix probe = hplus(t1);
    require_state(probe, psi, "cross_term");
    require_same_dim(probe, hminus(t1), "cross_term");
    const Eigen::Index n = probe.rows();

    // Cumulative integrals of both parts side by side: [K+(s) | K-(s)].
    const auto inner = [&](double s) -> CMatrix {
        CMatrix both(n, 2 * n);
        both.leftCols(n) = hplus(s);
        both.rightCols(n) = hminus(s);
        return both;
    };
    const auto outer = [&](double s, const CMatrix& k) -> CMatrix {
        const CMatrix kplus = k.leftCols(n);
        const CMatrix kminus = k.rightCols(n);
        const CMatrix integrand = commutator(hplus(s), kminus) - commutator(kplus, hminus(s));
        CMatrix m(1, 1);
        m(0, 0) = psi.dot(integrand * psi);
        return m;
    };
    return integrate_nested(inner, outer, t1, t2, cfg, max_frequency).value(0, 0);
}

std::vector<SplitIntegrals> split_integrals_series(const MatrixFunction& h, const StateVector& psi, double t1,
                                                   const std::vector<double>& times, const QuadratureConfig& cfg,
                                                   std::optional<double> max_frequency) {
    cfg.validate();
    if (times.empty()) return {};
    double prev = t1;
    for (double t : times) {
        check_interval(prev, t, "split_integrals_series");
        prev = t;
    }
    const CMatrix probe = h(t1);
    require_state(probe, psi, "split_integrals_series");
    const Eigen::Index n = probe.rows();
    const std::size_t nt = times.size();

    // base panel count per interval between consecutive requested times
    std::vector<int> base(nt);
    const double span = times.back() - t1;
    prev = t1;
    for (std::size_t j = 0; j < nt; ++j) {
        const double len = times[j] - prev;
        if (len == 0.0) base[j] = 0;
        else if (max_frequency) base[j] = initial_panels(prev, times[j], max_frequency, cfg);
        else base[j] = std::max(1, static_cast<int>(std::ceil(kUnknownFrequencyPanels * len / span)));
        prev = times[j];
    }

    const auto& rule = gauss_legendre(cfg.nodes_per_panel);
    const CMatrix& smat = spectral_integration(cfg.nodes_per_panel);
    const int m = cfg.nodes_per_panel;
    const Eigen::Index block = 2 * n * n + 1;

    const auto estimate = [&](int multiplier) {
        CMatrix packed = CMatrix::Zero(block * static_cast<Eigen::Index>(nt), 1);
        CMatrix prefix_p = CMatrix::Zero(n, n);
        CMatrix prefix_m = CMatrix::Zero(n, n);
        Complex cross = 0.0;
        std::vector<CMatrix> hp(m), hm(m);
        double a0 = t1;
        for (std::size_t j = 0; j < nt; ++j) {
            const int panels = base[j] * multiplier;
            const double step = panels > 0 ? (times[j] - a0) / panels : 0.0;
            for (int k = 0; k < panels; ++k) {
                const double a = a0 + k * step;
                const double half = 0.5 * step;
                const double mid = a + half;
                for (int i = 0; i < m; ++i) {
                    auto parts = hermitian_split(h(mid + half * rule.nodes[i]));
                    hp[i] = std::move(parts.hermitian);
                    hm[i] = std::move(parts.anti_hermitian);
                }
                for (int i = 0; i < m; ++i) {
                    CMatrix kp = prefix_p;
                    CMatrix km = prefix_m;
                    for (int q = 0; q < m; ++q) {
                        const double c = half * smat(i, q).real();
                        kp += c * hp[q];
                        km += c * hm[q];
                    }
                    const CMatrix integrand = commutator(hp[i], km) - commutator(kp, hm[i]);
                    cross += (half * rule.weights[i]) * psi.dot(integrand * psi);
                }
                for (int i = 0; i < m; ++i) {
                    prefix_p += (half * rule.weights[i]) * hp[i];
                    prefix_m += (half * rule.weights[i]) * hm[i];
                }
            }
            a0 = times[j];
            const Eigen::Index off = block * static_cast<Eigen::Index>(j);
            packed.block(off, 0, n * n, 1) = prefix_p.reshaped();
            packed.block(off + n * n, 0, n * n, 1) = prefix_m.reshaped();
            packed(off + 2 * n * n, 0) = cross;
        }
        return packed;
    };
    const CMatrix packed = refine(estimate, 1, cfg, "split_integrals_series").value;

    std::vector<SplitIntegrals> out(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        const Eigen::Index off = block * static_cast<Eigen::Index>(j);
        out[j].t = times[j];
        out[j].i_plus = packed.block(off, 0, n * n, 1).reshaped(n, n);
        out[j].i_minus = packed.block(off + n * n, 0, n * n, 1).reshaped(n, n);
        out[j].cross = packed(off + 2 * n * n, 0);
    }
    return out;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol, int max_depth) {
    if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("integrate_adaptive: non-finite limits");
    if (a == b) return 0.0;
    const auto& rule = gauss_legendre(10);
    const std::function<double(double, double, double, double, int)> recurse =
        [&](double lo, double hi, double whole, double tol, int depth) -> double {
        const double mid = 0.5 * (lo + hi);
        const double left = panel(f, lo, mid, rule);
        const double right = panel(f, mid, hi, rule);
        const double split = left + right;
        if (std::abs(split - whole) <= tol || depth >= max_depth) return split;
        return recurse(lo, mid, left, 0.5 * tol, depth + 1) + recurse(mid, hi, right, 0.5 * tol, depth + 1);
    };
    return recurse(a, b, panel(f, a, b, rule), abs_tol, 0);
}

}  // namespace znh
