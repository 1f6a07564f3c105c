#pragma once

// The three-measurement protocol: preparation (Ma = +1), weak S1 readout on
// the meter, projective S2 readout on the signal. Produces the four
// meter x signal coincidence probabilities and the estimators built on them.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lgsim/errors.hpp"
#include "lgsim/optics.hpp"
#include "lgsim/qcore.hpp"

namespace lgsim::experiment {

using qcore::Diagonal;
using qcore::MeterSetting;

/// Estimators dividing by K refuse to run below this strength.
inline constexpr double kMinKnowledge = 1e-9;
/// Smallest post-selection probability for which a weak value is reported.
inline constexpr double kMinPostselection = 1e-12;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct IdealGate {};
struct PpbsGate {
    double visibility = 1.0;
};
using GateModel = std::variant<IdealGate, PpbsGate>;

/// How the <S1 S2> term is normalized. The weak S1 outcome is rescaled by 1/K
/// (matching the <S1> calibration) unless Raw is chosen.
enum class CorrelatorNorm { DivideByK, Raw };

struct ExperimentConfig {
    double theta = 0.0;
    MeterSetting meter = MeterSetting::from_knowledge(1.0);
    int mb_sign = +1;
    GateModel gate = IdealGate{};
    CorrelatorNorm correlator = CorrelatorNorm::DivideByK;

    void validate() const {
        if (!std::isfinite(theta)) throw InvalidArgument("ExperimentConfig: theta must be finite");
        if (mb_sign != 1 && mb_sign != -1) throw InvalidArgument("ExperimentConfig: mb_sign must be +1 or -1");
        if (const auto* p = std::get_if<PpbsGate>(&gate)) {
            if (!std::isfinite(p->visibility) || p->visibility < 0.0 || p->visibility > 1.0)
                throw InvalidArgument("ExperimentConfig: visibility must lie in [0, 1]");
        }
    }
};

/// Joint outcome probabilities; first index is the meter (D/A), second the signal S2 outcome.
struct ProbabilityTable {
    double p_dd = 0.0;
    double p_da = 0.0;
    double p_ad = 0.0;
    double p_aa = 0.0;

    double meter_d() const { return p_dd + p_da; }
    double meter_a() const { return p_ad + p_aa; }
    /// Probability the signal is found in |D>.
    double signal_d() const { return p_dd + p_ad; }
    double signal_a() const { return p_da + p_aa; }
    double total() const { return p_dd + p_da + p_ad + p_aa; }

    void validate() const {
        for (double p : {p_dd, p_da, p_ad, p_aa})
            if (!std::isfinite(p) || p < -kExactTol || p > 1.0 + kExactTol)
                throw InvalidArgument("ProbabilityTable: probability outside [0, 1]");
        if (std::abs(total() - 1.0) > kExactTol) throw InvalidArgument("ProbabilityTable: probabilities do not sum to 1");
    }
};

struct LGRecord {
    double s1_mean = 0.0;
    double s2_mean = 0.0;
    double s1s2_corr = 0.0;
    double b = 0.0;
    int mb_sign = +1;
};

struct WeakValueRecord {
    /// Weak value of S1 post-selected on signal |D>.
    double wv = 0.0;
    /// Weak value of Mb = mb_sign * S1.
    double wv_mb = 0.0;
    double postselection_probability = 0.0;
};

namespace detail {

inline void require_strength(double k, const char* who) {
    if (!(k >= kMinKnowledge)) throw ZeroStrength(std::string(who) + ": measurement strength K below 1e-9");
}

inline ProbabilityTable table_from(auto&& prob) {
    return {prob(Diagonal::D, Diagonal::D), prob(Diagonal::D, Diagonal::A), prob(Diagonal::A, Diagonal::D),
            prob(Diagonal::A, Diagonal::A)};
}

inline qcore::JointState prepared_state(const ExperimentConfig& c) {
    return qcore::tensor(qcore::ket_signal(c.theta), qcore::meter_ket(c.meter));
}

}  // namespace detail

/// Runs the protocol through the ideal controlled-sign gate.
inline ProbabilityTable run_ideal(const ExperimentConfig& config) {
    const qcore::JointState out = qcore::apply_cz(detail::prepared_state(config));
    return detail::table_from([&](Diagonal m, Diagonal s) { return qcore::measure_joint(out, m, s); });
}

/// Runs the protocol through a precomputed heralded gate process.
inline ProbabilityTable run_with_map(const ExperimentConfig& config, const optics::EffectiveMap& map) {
    const auto rho_in = qcore::Density4::from_pure(detail::prepared_state(config).vector());
    const qcore::Density4 out = map.apply(rho_in);
    return detail::table_from([&](Diagonal m, Diagonal s) { return qcore::measure_joint(out, m, s); });
}

/// Evaluates repeated configurations against one gate model without rebuilding
/// the optical process for every call.
class Simulator {
public:
    explicit Simulator(const GateModel& gate) : gate_(gate) {
        if (const auto* p = std::get_if<PpbsGate>(&gate)) map_.emplace(optics::effective_map(p->visibility));
    }

    const GateModel& gate() const { return gate_; }

    ProbabilityTable run(ExperimentConfig config) const {
        config.gate = gate_;
        config.validate();
        return map_ ? run_with_map(config, *map_) : run_ideal(config);
    }

private:
    GateModel gate_;
    std::optional<optics::EffectiveMap> map_;
};

inline ProbabilityTable run(const ExperimentConfig& config) { return Simulator(config.gate).run(config); }

/// <S1> = (P(D) - P(A)) / K from the meter marginal.
inline double s1_mean(const ProbabilityTable& t, double k) {
    detail::require_strength(k, "s1_mean");
    return (t.meter_d() - t.meter_a()) / k;
}

inline double s2_mean(const ProbabilityTable& t) { return t.signal_d() - t.signal_a(); }

inline double s1s2_correlator(const ProbabilityTable& t, double k, CorrelatorNorm norm = CorrelatorNorm::DivideByK) {
    const double raw = t.p_dd - t.p_da - t.p_ad + t.p_aa;
    if (norm == CorrelatorNorm::Raw) return raw;
    detail::require_strength(k, "s1s2_correlator");
    return raw / k;
}

inline LGRecord lg_record(const ProbabilityTable& t, double k, int mb_sign,
                          CorrelatorNorm norm = CorrelatorNorm::DivideByK) {
    LGRecord r;
    r.mb_sign = mb_sign;
    r.s1_mean = s1_mean(t, k);
    r.s2_mean = s2_mean(t);
    r.s1s2_corr = s1s2_correlator(t, k, norm);
    r.b = mb_sign * r.s1_mean + mb_sign * r.s1s2_corr - r.s2_mean;
    return r;
}

/// B = <Ma Mb> + <Mb Mc> - <Ma Mc> with Ma = 1, Mb = mb_sign * S1, Mc = S2.
inline LGRecord lg_b(const ExperimentConfig& config) {
    detail::require_strength(config.meter.knowledge(), "lg_b");
    return lg_record(run(config), config.meter.knowledge(), config.mb_sign, config.correlator);
}

/// (P(D|D) - P(A|D)) / K, conditioned on the signal leaving in |D>.
inline WeakValueRecord weak_value(const ProbabilityTable& t, double k, int mb_sign = +1) {
    detail::require_strength(k, "weak_value");
    const double post = t.signal_d();
    if (!(post >= kMinPostselection))
        throw DegenerateConditioning("weak_value: post-selection probability vanishes");
    WeakValueRecord r;
    r.postselection_probability = post;
    r.wv = (t.p_dd - t.p_ad) / (k * post);
    r.wv_mb = mb_sign * r.wv;
    return r;
}

inline WeakValueRecord weak_value(const ExperimentConfig& config) {
    return weak_value(run(config), config.meter.knowledge(), config.mb_sign);
}

/// Same estimator post-selected on signal |A>. Reported for completeness only.
inline WeakValueRecord weak_value_antidiagonal(const ProbabilityTable& t, double k, int mb_sign = +1) {
    detail::require_strength(k, "weak_value_antidiagonal");
    const double post = t.signal_a();
    if (!(post >= kMinPostselection))
        throw DegenerateConditioning("weak_value_antidiagonal: post-selection probability vanishes");
    WeakValueRecord r;
    r.postselection_probability = post;
    r.wv = (t.p_da - t.p_aa) / (k * post);
    r.wv_mb = mb_sign * r.wv;
    return r;
}

struct ThetaGrid {
    double start = 0.0;
    double stop = kTwoPi;
    int steps = 256;

    void validate() const {
        if (steps < 2) throw InvalidArgument("ThetaGrid: steps must be >= 2");
        if (!std::isfinite(start) || !std::isfinite(stop)) throw InvalidArgument("ThetaGrid: bounds must be finite");
    }

    /// Inclusive of both endpoints.
    double at(int i) const {
        if (i == steps - 1) return stop;
        return start + (stop - start) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }
};

struct SweepRow {
    double theta = 0.0;
    double k = 0.0;
    ProbabilityTable table;
    LGRecord lg;
    /// NaN fields when the post-selection probability vanishes.
    WeakValueRecord weak;
};

inline SweepRow evaluate(const Simulator& sim, double theta, double k, int mb_sign,
                         CorrelatorNorm norm = CorrelatorNorm::DivideByK) {
    ExperimentConfig c;
    c.theta = theta;
    c.meter = MeterSetting::from_knowledge(k);
    c.mb_sign = mb_sign;
    c.correlator = norm;
    SweepRow row;
    row.theta = theta;
    row.k = k;
    row.table = sim.run(c);
    row.lg = lg_record(row.table, k, mb_sign, norm);
    try {
        row.weak = weak_value(row.table, k, mb_sign);
    } catch (const DegenerateConditioning&) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.weak = {nan, nan, row.table.signal_d()};
    }
    return row;
}

inline std::vector<SweepRow> theta_sweep(double k, int mb_sign, const GateModel& gate, const ThetaGrid& grid,
                                         CorrelatorNorm norm = CorrelatorNorm::DivideByK) {
    grid.validate();
    detail::require_strength(k, "theta_sweep");
    const Simulator sim(gate);
    std::vector<SweepRow> rows;
    rows.reserve(static_cast<std::size_t>(grid.steps));
    for (int i = 0; i < grid.steps; ++i) rows.push_back(evaluate(sim, grid.at(i), k, mb_sign, norm));
    return rows;
}

struct BMax {
    double theta_star = 0.0;
    double b_star = 0.0;
};

inline constexpr int kBMaxCoarsePoints = 1024;
inline constexpr double kBMaxThetaTol = 1e-10;

/// B(theta) for the +S1 convention with one gate model.
class BCurve {
public:
    BCurve(double k, const GateModel& gate, int mb_sign = +1) : sim_(gate), k_(k), mb_sign_(mb_sign) {
        detail::require_strength(k, "BCurve");
    }

    double operator()(double theta) const {
        ExperimentConfig c;
        c.theta = theta;
        c.meter = MeterSetting::from_knowledge(k_);
        c.mb_sign = mb_sign_;
        return lg_record(sim_.run(c), k_, mb_sign_).b;
    }

private:
    Simulator sim_;
    double k_;
    int mb_sign_;
};

namespace detail {

inline double wrap_angle(double theta) {
    double w = std::fmod(theta, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    return w;
}

// Golden-section maximization of a unimodal function on [lo, hi].
template <typename F>
double golden_max(F&& f, double lo, double hi, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Root of g on [lo, hi] given sign(g(lo)) != sign(g(hi)).
template <typename G>
double bisect(G&& g, double lo, double hi, double tol) {
    double glo = g(lo);
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm > 0.0) == (glo > 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Maximum of B over theta: 1024-point grid, then golden-section on the bracketing cell.
inline BMax b_max(double k, const GateModel& gate = IdealGate{}, int mb_sign = +1) {
    const BCurve curve(k, gate, mb_sign);
    const double step = kTwoPi / kBMaxCoarsePoints;
    int best = 0;
    double best_b = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < kBMaxCoarsePoints; ++i) {
        const double b = curve(i * step);
        if (b > best_b) {
            best_b = b;
            best = i;
        }
    }
    const double theta = detail::golden_max(curve, (best - 1) * step, (best + 1) * step, kBMaxThetaTol);
    const double b = curve(theta);
    if (b >= best_b) return {detail::wrap_angle(theta), b};
    return {best * step, best_b};
}

struct ViolationInterval {
    double theta_lo = 0.0;
    double theta_hi = 0.0;
    bool empty = true;

    /// theta_hi may exceed 2*pi when the interval wraps; theta_lo is in [0, 2*pi).
    double width() const { return empty ? 0.0 : theta_hi - theta_lo; }
    bool contains(double theta) const {
        if (empty) return false;
        const double rel = detail::wrap_angle(theta - theta_lo);
        return rel > 0.0 && rel < width();
    }
};

/// Guard used to decide that the peak of B genuinely exceeds the classical bound.
inline constexpr double kViolationGuard = 1e-9;

/// The contiguous theta interval around the B maximum on which B > 1 (Mb = +S1).
inline ViolationInterval violation_interval(double k, const GateModel& gate = IdealGate{}) {
    const BMax peak = b_max(k, gate);
    if (peak.b_star <= 1.0 + kViolationGuard) return {};
    const BCurve curve(k, gate);
    auto excess = [&](double t) { return curve(t) - 1.0; };
    const double far = peak.theta_star + std::numbers::pi;
    if (excess(far) > 0.0) return {0.0, kTwoPi, false};
    const double lo = detail::bisect(excess, far - kTwoPi, peak.theta_star, kBMaxThetaTol);
    const double hi = detail::bisect(excess, peak.theta_star, far, kBMaxThetaTol);
    const double lo_wrapped = detail::wrap_angle(lo);
    return {lo_wrapped, lo_wrapped + (hi - lo), false};
}

// Closed forms for the ideal gate; used by tests and the zero-strength curve.
namespace closed_form {

inline double s1(double theta) { return std::cos(theta); }
inline double s2(double theta, double k) { return std::sin(theta) * std::sqrt(1.0 - k * k); }
inline double b(double theta, double k, int mb_sign) { return mb_sign * std::cos(theta) - s2(theta, k); }
inline double weak_value(double theta, double k) { return std::cos(theta) / (1.0 + s2(theta, k)); }
inline double b_max(double k) { return std::sqrt(2.0 - k * k); }
/// Width of the theta interval on which cos(theta) - sin(theta) sqrt(1-K^2) > 1.
inline double violation_width(double k) { return 2.0 * std::atan(std::sqrt(1.0 - k * k)); }
/// K -> 0 limit of B, with no division by K anywhere.
inline double b_zero_strength(double theta, int mb_sign) { return mb_sign * std::cos(theta) - std::sin(theta); }

}  // namespace closed_form

}  // namespace lgsim::experiment
