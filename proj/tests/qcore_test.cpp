#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "lgsim/qcore.hpp"
#include "oracle.hpp"

using namespace lgsim;
using namespace lgsim::qcore;

namespace {

constexpr double kTol = 1e-12;
constexpr double kPi = std::numbers::pi;
const double kR2 = 1.0 / std::sqrt(2.0);

JointState random_joint(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Vec4 v;
    for (int i = 0; i < 4; ++i) v(i) = cplx(n(rng), n(rng));
    return JointState::normalized(v);
}

}  // namespace

TEST(KetSignal, BasisPoints) {
    auto h = ket_signal(0.0);
    EXPECT_NEAR(std::abs(h.h() - 1.0), 0.0, kTol);
    EXPECT_NEAR(std::abs(h.v()), 0.0, kTol);

    auto v = ket_signal(kPi);
    EXPECT_NEAR(std::abs(v.h()), 0.0, kTol);
    EXPECT_NEAR(std::abs(v.v() - 1.0), 0.0, kTol);

    auto d = ket_signal(kPi / 2);
    EXPECT_NEAR(d.h().real(), kR2, kTol);
    EXPECT_NEAR(d.v().real(), kR2, kTol);
}

TEST(KetSignal, RejectsNonFinite) {
    EXPECT_THROW(ket_signal(std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
    EXPECT_THROW(ket_signal(std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST(MeterSetting, FromKnowledgeEndpointsAndQuotedStrengths) {
    auto full = from_knowledge(1.0);
    EXPECT_NEAR(full.gamma(), 1.0, kTol);
    EXPECT_NEAR(full.gamma_bar(), 0.0, kTol);

    auto none = from_knowledge(0.0);
    EXPECT_NEAR(none.gamma(), kR2, kTol);
    EXPECT_NEAR(none.gamma_bar(), kR2, kTol);

    // frozen from closed-form inversion sqrt((1+K)/2)
    EXPECT_NEAR(from_knowledge(0.5445).gamma(), 0.878777560023013, 1e-12);
    EXPECT_NEAR(from_knowledge(0.1598).gamma(), 0.761511654539837, 1e-12);
}

TEST(MeterSetting, Invariants) {
    for (double k : {0.0, 0.05, 0.1598, 0.5445, 0.9, 1.0}) {
        auto m = from_knowledge(k);
        EXPECT_NEAR(m.gamma() * m.gamma() + m.gamma_bar() * m.gamma_bar(), 1.0, kTol);
        EXPECT_NEAR(2 * m.gamma() * m.gamma() - 1.0, m.knowledge(), kTol);
        auto g = MeterSetting::from_gamma(m.gamma());
        EXPECT_NEAR(g.knowledge(), k, kTol);
    }
}

TEST(MeterSetting, RejectsOutOfRange) {
    EXPECT_THROW(from_knowledge(-0.01), InvalidArgument);
    EXPECT_THROW(from_knowledge(1.01), InvalidArgument);
    EXPECT_THROW(from_knowledge(std::nan("")), InvalidArgument);
    EXPECT_THROW(MeterSetting::from_gamma(0.5), InvalidArgument);
}

TEST(MeterKet, Examples) {
    auto d = meter_ket(from_knowledge(1.0));
    EXPECT_NEAR(d.h().real(), kR2, kTol);
    EXPECT_NEAR(d.v().real(), kR2, kTol);

    auto h = meter_ket(from_knowledge(0.0));
    EXPECT_NEAR(h.h().real(), 1.0, kTol);
    EXPECT_NEAR(std::abs(h.v()), 0.0, kTol);
}

TEST(BasisOutcome, Signs) {
    static_assert(sign(Basis::H) == 1 && sign(Basis::V) == -1);
    static_assert(sign(Basis::D) == 1 && sign(Basis::A) == -1);
    EXPECT_NEAR(ket(Basis::D).dot(ket(Basis::A)).real(), 0.0, kTol);
}

TEST(Tensor, Ordering) {
    auto hh = tensor(ket_signal(0), ket_signal(0));
    EXPECT_NEAR(std::abs(hh.amplitude(0) - 1.0), 0.0, kTol);
    auto vv = tensor(ket_signal(kPi), ket_signal(kPi));
    EXPECT_NEAR(std::abs(vv.amplitude(3) - 1.0), 0.0, kTol);
    auto dd = tensor(ket_signal(kPi / 2), ket_signal(kPi / 2));
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(dd.amplitude(i).real(), 0.5, kTol);
    // signal-major: |H>|V> is index 1
    auto hv = tensor(ket_signal(0), ket_signal(kPi));
    EXPECT_NEAR(std::abs(hv.amplitude(1) - 1.0), 0.0, kTol);
}

TEST(ApplyCz, DefiningAction) {
    auto vv = apply_cz(tensor(ket_signal(kPi), ket_signal(kPi)));
    EXPECT_NEAR(vv.amplitude(3).real(), -1.0, kTol);

    for (double k : {0.0, 0.3, 1.0}) {
        auto mu = meter_ket(from_knowledge(k));
        auto in = tensor(ket_signal(0), mu);
        EXPECT_NEAR((apply_cz(in).vector() - in.vector()).norm(), 0.0, kTol);
    }
}

TEST(ApplyCz, VControlSwapsMeterDiagonalWeights) {
    // |V>(g|D> + gb|A>) -> |V>(g|A> + gb|D>)
    auto m = from_knowledge(0.5445);
    auto out = apply_cz(tensor(ket_signal(kPi), meter_ket(m)));
    Vec2 expected_meter = m.gamma() * ket(Basis::A) + m.gamma_bar() * ket(Basis::D);
    EXPECT_NEAR(std::abs(out.amplitude(0)), 0.0, kTol);
    EXPECT_NEAR(std::abs(out.amplitude(1)), 0.0, kTol);
    EXPECT_NEAR(std::abs(out.amplitude(2) - expected_meter(0)), 0.0, kTol);
    EXPECT_NEAR(std::abs(out.amplitude(3) - expected_meter(1)), 0.0, kTol);
}

TEST(ApplyCz, InvolutionAndNormOnRandomStates) {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 1000; ++i) {
        auto s = random_joint(rng);
        auto once = apply_cz(s);
        EXPECT_NEAR(once.vector().norm(), 1.0, kTol);
        EXPECT_NEAR((apply_cz(once).vector() - s.vector()).norm(), 0.0, kTol);
    }
}

TEST(ApplyCz, DensityOverloadMatchesPure) {
    std::mt19937_64 rng(5);
    auto s = random_joint(rng);
    auto rho = apply_cz(Density4::from_pure(s.vector()));
    auto psi = apply_cz(s).vector();
    EXPECT_NEAR((rho.matrix() - psi * psi.adjoint()).norm(), 0.0, kTol);
}

TEST(MeasureJoint, Examples) {
    auto dd = tensor(ket_signal(kPi / 2), ket_signal(kPi / 2));
    EXPECT_NEAR(measure_joint(dd, Diagonal::D, Diagonal::D), 1.0, kTol);
    EXPECT_NEAR(measure_joint(dd, Diagonal::A, Diagonal::D), 0.0, kTol);
    EXPECT_NEAR(measure_joint(dd, Diagonal::A, Diagonal::A), 0.0, kTol);

    auto post = apply_cz(tensor(ket_signal(kPi / 2), meter_ket(from_knowledge(0.5445))));
    const double frozen = 0.459690210489188;  // numpy dense |<DD|psi>|^2
    EXPECT_NEAR(measure_joint(post, Diagonal::D, Diagonal::D), frozen, kTol);
    EXPECT_NEAR(measure_joint(post, Diagonal::D, Diagonal::D), oracle::dense_ideal(kPi / 2, 0.5445).dd, kTol);
}

TEST(MeasureJoint, ProbabilitiesFormDistributionForAllThetaK) {
    for (int i = 0; i < 64; ++i) {
        const double theta = 2 * kPi * i / 64;
        for (double k : {0.0, 0.05, 0.1598, 0.5445, 0.9, 1.0}) {
            auto m = from_knowledge(k);
            auto post = apply_cz(tensor(ket_signal(theta), meter_ket(m)));
            double sum = 0.0;
            for (auto a : {Diagonal::D, Diagonal::A})
                for (auto b : {Diagonal::D, Diagonal::A}) {
                    const double p = measure_joint(post, a, b);
                    EXPECT_GE(p, -kTol);
                    EXPECT_LE(p, 1.0 + kTol);
                    sum += p;
                }
            EXPECT_NEAR(sum, 1.0, kTol);
            // meter marginal encodes K cos(theta)
            const double pd = measure_joint(post, Diagonal::D, Diagonal::D) + measure_joint(post, Diagonal::D, Diagonal::A);
            const double pa = measure_joint(post, Diagonal::A, Diagonal::D) + measure_joint(post, Diagonal::A, Diagonal::A);
            EXPECT_NEAR(pd - pa, k * std::cos(theta), kTol);
        }
    }
}

TEST(MeasureJoint, DensityAgreesWithPure) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        auto s = random_joint(rng);
        auto rho = Density4::from_pure(s.vector());
        for (auto a : {Diagonal::D, Diagonal::A})
            for (auto b : {Diagonal::D, Diagonal::A}) EXPECT_NEAR(measure_joint(rho, a, b), measure_joint(s, a, b), kTol);
    }
}

TEST(ConditionalSignalState, Examples) {
    auto hd = tensor(ket_signal(0), ket_signal(kPi / 2));
    auto c1 = conditional_signal_state(hd, Diagonal::D);
    EXPECT_NEAR(c1.probability, 1.0, kTol);
    EXPECT_NEAR(std::abs(c1.state.h()), 1.0, kTol);

    Vec4 schmidt;  // (|H>|D> + |V>|A>)/sqrt2
    schmidt << 0.5, 0.5, 0.5, -0.5;
    auto c2 = conditional_signal_state(JointState::from_vector(schmidt), Diagonal::A);
    EXPECT_NEAR(c2.probability, 0.5, kTol);
    EXPECT_NEAR(std::abs(c2.state.v()), 1.0, kTol);

    // frozen from numpy brute-force projection + renormalization
    auto post = apply_cz(tensor(ket_signal(3 * kPi / 4), meter_ket(from_knowledge(0.16))));
    auto c3 = conditional_signal_state(post, Diagonal::D);
    EXPECT_NEAR(c3.probability, 0.443431457505076, kTol);
    EXPECT_NEAR(c3.state.h().real(), 0.437663579289459, kTol);
    EXPECT_NEAR(c3.state.v().real(), 0.899138805392993, kTol);
}

TEST(ConditionalSignalState, DegenerateOutcomeThrows) {
    auto dd = tensor(ket_signal(kPi / 2), ket_signal(kPi / 2));
    EXPECT_THROW(conditional_signal_state(dd, Diagonal::A), DegenerateConditioning);
    EXPECT_THROW(conditional_signal_state(Density4::from_pure(dd.vector()), Diagonal::A), DegenerateConditioning);
}

TEST(ConditionalSignalState, DensityMatchesPure) {
    auto post = apply_cz(tensor(ket_signal(1.1), meter_ket(from_knowledge(0.4))));
    auto pure = conditional_signal_state(post, Diagonal::A);
    auto mixed = conditional_signal_state(Density4::from_pure(post.vector()), Diagonal::A);
    EXPECT_NEAR(mixed.probability, pure.probability, kTol);
    EXPECT_NEAR((mixed.state.matrix() - pure.state.vector() * pure.state.vector().adjoint()).norm(), 0.0, kTol);
    EXPECT_NEAR(mixed.state.purity(), 1.0, kTol);
}

TEST(Observable, PauliAlgebra) {
    const Mat2 s1 = Observable::s1().matrix;
    const Mat2 s2 = Observable::s2().matrix;
    EXPECT_NEAR((s1 * s1 - Mat2::Identity()).norm(), 0.0, kTol);
    EXPECT_NEAR((s2 * s2 - Mat2::Identity()).norm(), 0.0, kTol);
    EXPECT_NEAR((s1 * s2 + s2 * s1).norm(), 0.0, kTol);
    Eigen::SelfAdjointEigenSolver<Mat2> e1(s1), e2(s2);
    EXPECT_NEAR(e1.eigenvalues()(0), -1.0, kTol);
    EXPECT_NEAR(e1.eigenvalues()(1), 1.0, kTol);
    EXPECT_NEAR(e2.eigenvalues()(0), -1.0, kTol);
    EXPECT_NEAR(e2.eigenvalues()(1), 1.0, kTol);
    EXPECT_NEAR(Observable::s2().expectation(ket_signal(kPi / 2)), 1.0, kTol);
    EXPECT_NEAR(Observable::s1().expectation(ket_signal(kPi / 3)), 0.5, kTol);
}

TEST(DensityOperator, Validation) {
    Mat2 bad_trace = Mat2::Identity();
    EXPECT_THROW(Density2::from_matrix(bad_trace), InvalidArgument);
    Mat2 non_herm;
    non_herm << 0.5, 0.1, 0.0, 0.5;
    EXPECT_THROW(Density2::from_matrix(non_herm), InvalidArgument);
    Mat2 negative;
    negative << 1.5, 0.0, 0.0, -0.5;
    EXPECT_THROW(Density2::from_matrix(negative), InvalidArgument);
    EXPECT_NO_THROW(Density2::from_matrix(Mat2::Identity() / 2.0));
}

TEST(PureState, RejectsUnnormalized) {
    EXPECT_THROW(PureState::from_amplitudes(1.0, 1.0), InvalidArgument);
    EXPECT_NO_THROW(PureState::from_amplitudes(kR2, cplx(0, kR2)));
    Vec4 v = Vec4::Zero();
    EXPECT_THROW(JointState::from_vector(v), InvalidArgument);
    EXPECT_THROW(JointState::normalized(v), InvalidArgument);
}
