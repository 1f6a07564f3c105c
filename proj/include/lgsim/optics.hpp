#pragma once

// Mode-level model of the linear-optical controlled-sign gate.
//
// Six optical modes: the signal arm and meter arm each carry an H and a V
// mode, and the two compensating beamsplitters dump rejected H light into one
// loss mode per arm. A coincidence (one photon in each arm) heralds success.
//
//   signal H ---------+           +-- [comp T_H] -- signal H'
//   signal V ---------| central   |---------------- signal V'
//   meter  H ---------| PPBS      |-- [comp T_H] -- meter  H'
//   meter  V ---------+  T_V      +---------------- meter  V'

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <map>
#include <utility>

#include "lgsim/errors.hpp"
#include "lgsim/qcore.hpp"

namespace lgsim::optics {

enum Mode : int { SignalH = 0, SignalV = 1, MeterH = 2, MeterV = 3, SignalLoss = 4, MeterLoss = 5 };
inline constexpr int kModeCount = 6;

using ModeUnitary = Eigen::Matrix<cplx, kModeCount, kModeCount>;
using Superoperator = Eigen::Matrix<cplx, 16, 16>;

/// Intensity transmissions of a partially polarizing beamsplitter.
struct PPBSSpec {
    double transmission_h = 1.0;
    double transmission_v = 1.0;

    static constexpr PPBSSpec central_default() { return {1.0, 1.0 / 3.0}; }
    static constexpr PPBSSpec compensator_default() { return {1.0 / 3.0, 1.0}; }

    void validate() const {
        auto ok = [](double t) { return std::isfinite(t) && t >= 0.0 && t <= 1.0; };
        if (!ok(transmission_h) || !ok(transmission_v))
            throw InvalidArgument("PPBSSpec: transmissions must lie in [0, 1]");
    }
};

struct NetworkSpec {
    PPBSSpec central = PPBSSpec::central_default();
    PPBSSpec signal_compensator = PPBSSpec::compensator_default();
    PPBSSpec meter_compensator = PPBSSpec::compensator_default();
};

namespace detail {

// Real beamsplitter rotation between modes a and b: a -> t a + r b, b -> -r a + t b.
// Columns are input modes, rows output modes.
inline ModeUnitary coupler(int a, int b, double transmission) {
    const double t = std::sqrt(transmission);
    const double r = std::sqrt(1.0 - transmission);
    ModeUnitary u = ModeUnitary::Identity();
    u(a, a) = t;
    u(b, a) = r;
    u(a, b) = -r;
    u(b, b) = t;
    return u;
}

}  // namespace detail

/// The central PPBS alone: signal and meter modes of equal polarization interfere.
inline ModeUnitary central_ppbs(const PPBSSpec& spec) {
    spec.validate();
    return detail::coupler(SignalH, MeterH, spec.transmission_h) *
           detail::coupler(SignalV, MeterV, spec.transmission_v);
}

/// Full 6-mode transformation. Compensators only attenuate H (one loss mode per arm),
/// so their V transmission must be 1.
inline ModeUnitary build_network(const NetworkSpec& spec = {}) {
    spec.central.validate();
    spec.signal_compensator.validate();
    spec.meter_compensator.validate();
    if (spec.signal_compensator.transmission_v != 1.0 || spec.meter_compensator.transmission_v != 1.0)
        throw InvalidArgument("build_network: compensator V transmission must be 1 (no loss mode for V light)");
    const ModeUnitary comp = detail::coupler(SignalH, SignalLoss, spec.signal_compensator.transmission_h) *
                             detail::coupler(MeterH, MeterLoss, spec.meter_compensator.transmission_h);
    return comp * central_ppbs(spec.central);
}

/// Two-photon output amplitudes keyed by the (sorted) pair of occupied output modes.
/// A doubly occupied mode appears as (k, k).
class ModeAmplitudeTable {
public:
    using Key = std::pair<int, int>;

    void add(int k, int l, cplx amplitude) {
        if (k > l) std::swap(k, l);
        entries_[{k, l}] += amplitude;
    }

    cplx at(int k, int l) const {
        if (k > l) std::swap(k, l);
        auto it = entries_.find({k, l});
        return it == entries_.end() ? cplx{} : it->second;
    }

    double total_probability() const {
        double s = 0.0;
        for (const auto& [key, amp] : entries_) s += std::norm(amp);
        return s;
    }

    const std::map<Key, cplx>& entries() const { return entries_; }

private:
    std::map<Key, cplx> entries_;
};

inline constexpr std::array<int, 2> kSignalModes{SignalH, SignalV};
inline constexpr std::array<int, 2> kMeterModes{MeterH, MeterV};

inline bool is_coincidence(int k, int l) {
    auto in_signal = [](int m) { return m == SignalH || m == SignalV; };
    auto in_meter = [](int m) { return m == MeterH || m == MeterV; };
    return (in_signal(k) && in_meter(l)) || (in_meter(k) && in_signal(l));
}

/// Full two-photon output for an input with one photon in each arm. Each term is a
/// 2x2 permanent; bunched outcomes carry the sqrt(2) Fock normalization.
inline ModeAmplitudeTable two_photon_amplitudes(const qcore::JointState& input, const ModeUnitary& u) {
    ModeAmplitudeTable table;
    for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) {
            const cplx psi = input.amplitude(2 * p + q);
            if (psi == cplx{}) continue;
            const int i = kSignalModes[p];
            const int j = kMeterModes[q];
            for (int k = 0; k < kModeCount; ++k) {
                for (int l = k; l < kModeCount; ++l) {
                    const cplx perm = k == l ? std::sqrt(2.0) * u(k, i) * u(k, j)
                                             : u(k, i) * u(l, j) + u(l, i) * u(k, j);
                    table.add(k, l, psi * perm);
                }
            }
        }
    }
    return table;
}

/// Only the heralded outcomes: one photon in the signal arm, one in the meter arm.
inline ModeAmplitudeTable coincidence_amplitudes(const qcore::JointState& input, const ModeUnitary& u) {
    const ModeAmplitudeTable all = two_photon_amplitudes(input, u);
    ModeAmplitudeTable out;
    for (const auto& [key, amp] : all.entries())
        if (is_coincidence(key.first, key.second)) out.add(key.first, key.second, amp);
    return out;
}

/// Coincidence amplitudes arranged in the (HH, HV, VH, VV) signal-major basis.
inline qcore::Vec4 coincidence_vector(const ModeAmplitudeTable& table) {
    qcore::Vec4 v;
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) v(2 * p + q) = table.at(kSignalModes[p], kMeterModes[q]);
    return v;
}

/// Heralded-gate Kraus pair. `direct`: each photon stays in its own arm;
/// `exchange`: the two photons swap arms at the central PPBS. Indistinguishable
/// photons add the two amplitudes; distinguishable ones add probabilities.
struct GateKraus {
    qcore::Mat4 direct;
    qcore::Mat4 exchange;
};

inline GateKraus gate_kraus(const ModeUnitary& u) {
    GateKraus k{qcore::Mat4::Zero(), qcore::Mat4::Zero()};
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
            for (int po = 0; po < 2; ++po)
                for (int qo = 0; qo < 2; ++qo) {
                    const int in_s = kSignalModes[p], in_m = kMeterModes[q];
                    const int out_s = kSignalModes[po], out_m = kMeterModes[qo];
                    k.direct(2 * po + qo, 2 * p + q) = u(out_s, in_s) * u(out_m, in_m);
                    k.exchange(2 * po + qo, 2 * p + q) = u(out_m, in_s) * u(out_s, in_m);
                }
    return k;
}

namespace detail {

// vec(K rho K^dagger) = (conj(K) (x) K) vec(rho), column-stacking vec.
inline Superoperator conjugation_superop(const qcore::Mat4& k) {
    Superoperator s;
    const qcore::Mat4 kc = k.conjugate();
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) s.block<4, 4>(4 * a, 4 * b) = kc(a, b) * k;
    return s;
}

inline Eigen::Matrix<cplx, 16, 1> vec(const qcore::Mat4& m) {
    return Eigen::Map<const Eigen::Matrix<cplx, 16, 1>>(m.data());
}

inline qcore::Mat4 unvec(const Eigen::Matrix<cplx, 16, 1>& v) { return Eigen::Map<const qcore::Mat4>(v.data()); }

}  // namespace detail

/// Heralded two-qubit process of the gate with partially distinguishable photons.
class EffectiveMap {
public:
    EffectiveMap(Superoperator superop, double visibility)
        : superop_(std::move(superop)), visibility_(visibility) {
        success_ = std::real(apply_unnormalized(qcore::Mat4::Identity() / 4.0).trace());
    }

    const Superoperator& superoperator() const { return superop_; }
    double visibility() const { return visibility_; }

    /// Coincidence probability averaged over inputs (maximally mixed input).
    double success_probability() const { return success_; }

    double success_probability(const qcore::Density4& rho) const {
        return std::real(apply_unnormalized(rho.matrix()).trace());
    }

    qcore::Mat4 apply_unnormalized(const qcore::Mat4& rho) const {
        return detail::unvec(superop_ * detail::vec(rho));
    }

    /// Post-selected output state, renormalized by its coincidence probability.
    qcore::Density4 apply(const qcore::Density4& rho) const {
        qcore::Mat4 out = apply_unnormalized(rho.matrix());
        const double p = std::real(out.trace());
        if (p <= kDegenerateProbability)
            throw DegenerateConditioning("EffectiveMap: input never produces a coincidence");
        out /= p;
        out = (0.5 * (out + out.adjoint())).eval();
        return qcore::Density4::from_matrix(out);
    }

    /// Choi matrix J = sum_ij E(|i><j|) (x) |i><j|, output index major.
    Superoperator choi() const {
        Superoperator j;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int i = 0; i < 4; ++i)
                    for (int k = 0; k < 4; ++k) j(4 * a + i, 4 * b + k) = superop_(a + 4 * b, i + 4 * k);
        return j;
    }

private:
    Superoperator superop_;
    double visibility_;
    double success_ = 0.0;
};

/// xi * (interfering map) + (1 - xi) * (which-path map) for mode overlap xi.
inline EffectiveMap effective_map(double xi, const NetworkSpec& spec = {}) {
    if (!std::isfinite(xi) || xi < 0.0 || xi > 1.0)
        throw InvalidArgument("effective_map: visibility must lie in [0, 1]");
    const GateKraus k = gate_kraus(build_network(spec));
    Superoperator s = xi * detail::conjugation_superop(k.direct + k.exchange);
    if (xi < 1.0)
        s += (1.0 - xi) * (detail::conjugation_superop(k.direct) + detail::conjugation_superop(k.exchange));
    return EffectiveMap(std::move(s), xi);
}

/// Entanglement (process) fidelity of the trace-normalized map against a target unitary.
inline double process_fidelity(const EffectiveMap& map, const qcore::Mat4& target = qcore::cz_matrix()) {
    const Superoperator j = map.choi();
    Eigen::Matrix<cplx, 16, 1> phi;
    for (int a = 0; a < 4; ++a)
        for (int i = 0; i < 4; ++i) phi(4 * a + i) = target(a, i) / 2.0;
    return std::real(phi.dot(j * phi)) / std::real(j.trace());
}

}  // namespace lgsim::optics
