#pragma once

// Exact one- and two-qubit polarization primitives.
//
// Conventions used throughout the library:
//   single qubit basis (H, V); |D> = (|H>+|V>)/sqrt2, |A> = (|H>-|V>)/sqrt2
//   two-qubit basis (HH, HV, VH, VV), signal qubit first (Kronecker major index)
//   S1 = |H><H| - |V><V|,  S2 = |D><D| - |A><A|
//   controlled-sign: phase -1 on |VV>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>

#include "lgsim/errors.hpp"

namespace lgsim {

using cplx = std::complex<double>;

/// Tolerance for identities that hold exactly in real arithmetic.
inline constexpr double kExactTol = 1e-12;
/// Outcome probabilities at or below this are treated as true zeros.
inline constexpr double kDegenerateProbability = 1e-15;
/// Smallest eigenvalue a density matrix may have before it is rejected.
inline constexpr double kEigenvalueFloor = -1e-10;

inline constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

namespace qcore {

using Vec2 = Eigen::Matrix<cplx, 2, 1>;
using Vec4 = Eigen::Matrix<cplx, 4, 1>;
using Mat2 = Eigen::Matrix<cplx, 2, 2>;
using Mat4 = Eigen::Matrix<cplx, 4, 4>;

/// Normalized single-qubit polarization state (a_H, a_V).
class PureState {
public:
    static PureState from_amplitudes(cplx h, cplx v) {
        Vec2 amps;
        amps << h, v;
        return from_vector(amps);
    }

    static PureState from_vector(const Vec2& amps) {
        if (!amps.allFinite()) throw InvalidArgument("PureState: non-finite amplitude");
        if (std::abs(amps.squaredNorm() - 1.0) > kExactTol)
            throw InvalidArgument("PureState: amplitudes not normalized");
        return PureState(amps);
    }

    /// Renormalizes; the input must have nonzero norm.
    static PureState normalized(const Vec2& amps) {
        const double n = amps.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("PureState: zero or non-finite vector");
        return PureState(amps / n);
    }

    cplx h() const { return amps_(0); }
    cplx v() const { return amps_(1); }
    const Vec2& vector() const { return amps_; }

private:
    explicit PureState(const Vec2& amps) : amps_(amps) {}
    Vec2 amps_;
};

/// Normalized signal-meter state over (HH, HV, VH, VV).
class JointState {
public:
    static JointState from_vector(const Vec4& amps) {
        if (!amps.allFinite()) throw InvalidArgument("JointState: non-finite amplitude");
        if (std::abs(amps.squaredNorm() - 1.0) > kExactTol)
            throw InvalidArgument("JointState: amplitudes not normalized");
        return JointState(amps);
    }

    static JointState normalized(const Vec4& amps) {
        const double n = amps.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("JointState: zero or non-finite vector");
        return JointState(amps / n);
    }

    cplx amplitude(int index) const { return amps_(index); }
    const Vec4& vector() const { return amps_; }

private:
    explicit JointState(const Vec4& amps) : amps_(amps) {}
    Vec4 amps_;
};

/// Validated density matrix of dimension 2 (one qubit) or 4 (signal-meter pair).
template <int Dim>
class DensityOperator {
    static_assert(Dim == 2 || Dim == 4, "only one- and two-qubit density operators are modeled");

public:
    using Matrix = Eigen::Matrix<cplx, Dim, Dim>;
    using Vector = Eigen::Matrix<cplx, Dim, 1>;

    static DensityOperator from_matrix(const Matrix& m) {
        if (!m.allFinite()) throw InvalidArgument("DensityOperator: non-finite entry");
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kExactTol)
            throw InvalidArgument("DensityOperator: not Hermitian");
        if (std::abs(m.trace() - cplx{1.0, 0.0}) > kExactTol)
            throw InvalidArgument("DensityOperator: trace != 1");
        Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < kEigenvalueFloor)
            throw InvalidArgument("DensityOperator: negative eigenvalue");
        return DensityOperator(m);
    }

    static DensityOperator from_pure(const Vector& psi) {
        if (std::abs(psi.squaredNorm() - 1.0) > kExactTol)
            throw InvalidArgument("DensityOperator: pure state not normalized");
        return DensityOperator(psi * psi.adjoint());
    }

    const Matrix& matrix() const { return rho_; }

    /// <v|rho|v> for a (not necessarily normalized) vector.
    double expectation(const Vector& v) const { return std::real(v.dot(rho_ * v)); }

    double purity() const { return std::real((rho_ * rho_).trace()); }

private:
    explicit DensityOperator(const Matrix& m) : rho_(m) {}
    Matrix rho_;
};

using Density2 = DensityOperator<2>;
using Density4 = DensityOperator<4>;

/// Meter preparation gamma|D> + gamma_bar|A>, with knowledge K = 2 gamma^2 - 1.
class MeterSetting {
public:
    static MeterSetting from_gamma(double gamma) {
        if (!std::isfinite(gamma) || gamma < kInvSqrt2 - kExactTol || gamma > 1.0 + kExactTol)
            throw InvalidArgument("MeterSetting: gamma must lie in [1/sqrt2, 1]");
        gamma = std::clamp(gamma, kInvSqrt2, 1.0);
        return MeterSetting(gamma, std::sqrt(std::max(0.0, 1.0 - gamma * gamma)), 2.0 * gamma * gamma - 1.0);
    }

    static MeterSetting from_knowledge(double knowledge) {
        if (!std::isfinite(knowledge) || knowledge < 0.0 || knowledge > 1.0)
            throw InvalidArgument("MeterSetting: knowledge K must lie in [0, 1], got " + std::to_string(knowledge));
        return MeterSetting(std::sqrt((1.0 + knowledge) / 2.0), std::sqrt((1.0 - knowledge) / 2.0), knowledge);
    }

    double gamma() const { return gamma_; }
    double gamma_bar() const { return gamma_bar_; }
    double knowledge() const { return knowledge_; }

private:
    MeterSetting(double g, double gb, double k) : gamma_(g), gamma_bar_(gb), knowledge_(k) {}
    double gamma_;
    double gamma_bar_;
    double knowledge_;
};

inline MeterSetting from_knowledge(double knowledge) { return MeterSetting::from_knowledge(knowledge); }

enum class Basis { H, V, D, A };

/// Eigenvalue attached to a polarization outcome: +1 for H and D, -1 for V and A.
constexpr int sign(Basis b) { return (b == Basis::H || b == Basis::D) ? +1 : -1; }

/// Outcome of a measurement in the diagonal basis, the only basis read out in this experiment.
enum class Diagonal { D, A };

constexpr int sign(Diagonal d) { return d == Diagonal::D ? +1 : -1; }
constexpr Basis to_basis(Diagonal d) { return d == Diagonal::D ? Basis::D : Basis::A; }

inline Vec2 ket(Basis b) {
    switch (b) {
        case Basis::H: return Vec2(1.0, 0.0);
        case Basis::V: return Vec2(0.0, 1.0);
        case Basis::D: return Vec2(kInvSqrt2, kInvSqrt2);
        case Basis::A: return Vec2(kInvSqrt2, -kInvSqrt2);
    }
    return Vec2::Zero();
}

inline Vec2 ket(Diagonal d) { return ket(to_basis(d)); }

enum class StokesLabel { S1, S2 };

struct Observable {
    Mat2 matrix;
    StokesLabel label;

    static Observable s1() {
        Mat2 m;
        m << 1.0, 0.0, 0.0, -1.0;
        return {m, StokesLabel::S1};
    }
    static Observable s2() {
        Mat2 m;
        m << 0.0, 1.0, 1.0, 0.0;
        return {m, StokesLabel::S2};
    }

    double expectation(const PureState& s) const { return std::real(s.vector().dot(matrix * s.vector())); }
    double expectation(const Density2& rho) const { return std::real((rho.matrix() * matrix).trace()); }
};

/// cos(theta/2)|H> + sin(theta/2)|V>.
inline PureState ket_signal(double theta) {
    if (!std::isfinite(theta)) throw InvalidArgument("ket_signal: theta must be finite");
    return PureState::normalized(Vec2(std::cos(theta / 2.0), std::sin(theta / 2.0)));
}

/// gamma|D> + gamma_bar|A> expressed in the H/V basis.
inline PureState meter_ket(const MeterSetting& m) {
    return PureState::normalized(Vec2((m.gamma() + m.gamma_bar()) * kInvSqrt2,
                                      (m.gamma() - m.gamma_bar()) * kInvSqrt2));
}

inline JointState tensor(const PureState& signal, const PureState& meter) {
    Vec4 out;
    out << signal.h() * meter.h(), signal.h() * meter.v(), signal.v() * meter.h(), signal.v() * meter.v();
    return JointState::normalized(out);
}

inline Mat4 cz_matrix() {
    Mat4 m = Mat4::Identity();
    m(3, 3) = -1.0;
    return m;
}

inline JointState apply_cz(const JointState& state) {
    Vec4 out = state.vector();
    out(3) = -out(3);
    return JointState::from_vector(out);
}

inline Density4 apply_cz(const Density4& rho) {
    const Mat4 cz = cz_matrix();
    return Density4::from_matrix(cz * rho.matrix() * cz);
}

/// Projector vector |signal>|meter> for a joint diagonal-basis outcome.
inline Vec4 joint_outcome_vector(Diagonal meter, Diagonal signal) {
    const Vec2 s = ket(signal);
    const Vec2 m = ket(meter);
    Vec4 out;
    out << s(0) * m(0), s(0) * m(1), s(1) * m(0), s(1) * m(1);
    return out;
}

inline double measure_joint(const JointState& state, Diagonal meter, Diagonal signal) {
    return std::norm(joint_outcome_vector(meter, signal).dot(state.vector()));
}

inline double measure_joint(const Density4& rho, Diagonal meter, Diagonal signal) {
    return rho.expectation(joint_outcome_vector(meter, signal));
}

template <typename State>
struct Conditioned {
    State state;
    double probability;
};

/// Projects the meter onto a diagonal outcome and returns the renormalized signal state.
inline Conditioned<PureState> conditional_signal_state(const JointState& state, Diagonal meter_outcome) {
    const Vec2 m = ket(meter_outcome);
    const Vec4& psi = state.vector();
    // <m|_meter acting on signal-major amplitudes: signal index s, meter index q -> psi(2s+q)
    Vec2 reduced(std::conj(m(0)) * psi(0) + std::conj(m(1)) * psi(1),
                 std::conj(m(0)) * psi(2) + std::conj(m(1)) * psi(3));
    const double p = reduced.squaredNorm();
    if (p <= kDegenerateProbability)
        throw DegenerateConditioning("conditional_signal_state: meter outcome has zero probability");
    return {PureState::normalized(reduced), p};
}

inline Conditioned<Density2> conditional_signal_state(const Density4& rho, Diagonal meter_outcome) {
    const Vec2 m = ket(meter_outcome);
    // Kraus map I (x) <m| : 4 -> 2
    Eigen::Matrix<cplx, 2, 4> proj = Eigen::Matrix<cplx, 2, 4>::Zero();
    for (int s = 0; s < 2; ++s)
        for (int q = 0; q < 2; ++q) proj(s, 2 * s + q) = std::conj(m(q));
    Mat2 reduced = proj * rho.matrix() * proj.adjoint();
    const double p = std::real(reduced.trace());
    if (p <= kDegenerateProbability)
        throw DegenerateConditioning("conditional_signal_state: meter outcome has zero probability");
    reduced /= p;
    reduced = (0.5 * (reduced + reduced.adjoint())).eval();
    return {Density2::from_matrix(reduced), p};
}

}  // namespace qcore
}  // namespace lgsim
