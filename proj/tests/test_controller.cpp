#include "support.hpp"

#include <gtest/gtest.h>

using namespace ilc;
using namespace ilc::testing;

namespace {

double implicit_V(const LyapunovModel& m, const PureState& x) {
    return m.solve_gamma(x, three_level_target()).V;
}

std::vector<ControlSample> flat_history(double t0, double t1, double dt, double gamma, double v) {
    std::vector<ControlSample> h;
    for (double t = t0; t <= t1 + 1e-12; t += dt) {
        ControlSample s;
        s.t = t;
        s.gamma = gamma;
        s.v = {v, -v};
        h.push_back(s);
    }
    return h;
}

}  // namespace

TEST(Feedback, VanishesAtTargetAndOnDressedEigenstates) {
    const LyapunovModel m = three_level_model();
    const MechanicalQuantity q = m.quantity(0.0);
    for (double vk : feedback_v(three_level_target(), q, m.system())) EXPECT_LE(std::abs(vk), 1e-15);
    const MechanicalQuantity q2 = m.quantity(0.04);
    for (std::size_t j = 0; j < 3; ++j)
        for (double vk : feedback_v(PureState::normalized(q2.frame.direction(j)), q2, m.system()))
            EXPECT_LE(std::abs(vk), 1e-14);
}

TEST(Feedback, PureAndDensityLawsAgreeOnPureStates) {
    const LyapunovModel m = three_level_model();
    std::mt19937_64 rng(31);
    for (const FeedbackShape& shape : {FeedbackShape::identity(), FeedbackShape::scaled_tanh(0.05)}) {
        for (int trial = 0; trial < 10; ++trial) {
            const PureState x = random_state(rng, 3);
            const MechanicalQuantity q = m.quantity(0.03);
            const auto a = feedback_v(x, q, m.system(), shape);
            const auto b = feedback_v(DensityMatrix::from_pure(x), q, m.system(), shape);
            for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-14);
        }
    }
}

TEST(Feedback, GainScalesLinearlyAndTanhSaturates) {
    const FeedbackShape t = FeedbackShape::scaled_tanh(0.5);
    EXPECT_NEAR(t(1e-6), 1e-6, 1e-15);
    EXPECT_LT(t(100.0), 0.5 + 1e-15);
    EXPECT_THROW(FeedbackShape::scaled_tanh(0.0), std::invalid_argument);
}

TEST(VdotAnalytic, MatchesFiniteDifferenceOfImplicitV) {
    // Hold u = η + γ(ψ) + v(ψ) fixed and differentiate V_{γ(ψ(τ))}(ψ(τ)) at τ = 0.
    const LyapunovModel m = three_level_model();
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const PureState x = random_state(rng, 3);
        const GammaSolution g = m.solve_gamma(x, three_level_target());
        const auto v = feedback_v(x, g.P, m.system());
        const HermitianOperator dP = m.dP_dgamma(g.gamma);
        const double analytic = vdot_analytic(x, three_level_target(), m.system(), g.theta_prime, g.P, &dP, v);
        const HermitianOperator h = m.system().total_hamiltonian(total_controls(m.system(), g.gamma, v));
        const double tau = 1e-3;
        auto flow = [&](double s) {
            const ComplexMatrix u = unitary_propagator(h, std::abs(s));
            return PureState(s >= 0 ? ComplexVector(u * x.amplitudes()) : ComplexVector(u.adjoint() * x.amplitudes()));
        };
        const double d5 = (-implicit_V(m, flow(2 * tau)) + 8 * implicit_V(m, flow(tau)) -
                           8 * implicit_V(m, flow(-tau)) + implicit_V(m, flow(-2 * tau))) / (12 * tau);
        EXPECT_NEAR(analytic, d5, 1e-9 + 1e-6 * std::abs(analytic)) << "trial " << trial;
        EXPECT_LE(analytic, 1e-15);
    }
}

TEST(VdotAnalytic, StrictlyNegativeOffTheInvariantSet) {
    const LyapunovModel m = three_level_model();
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const PureState x = random_state(rng, 3);
        const GammaSolution g = m.solve_gamma(x, three_level_target());
        const auto v = feedback_v(x, g.P, m.system());
        double vv = 0.0;
        for (double vk : v) vv += vk * vk;
        if (vv < 1e-20) continue;
        const HermitianOperator dP = m.dP_dgamma(g.gamma);
        EXPECT_LT(vdot_analytic(x, three_level_target(), m.system(), m.theta(), g.P, dP, v), 0.0);
    }
}

TEST(VdotAnalytic, RejectsNonPositivePrefactor) {
    const LyapunovModel m = three_level_model();
    const PureState x = PureState::basis(3, 2);
    const MechanicalQuantity q = m.quantity(0.0);
    const std::vector<double> v = {0.1, 0.1};
    const HermitianOperator minus_one = -1.0 * HermitianOperator::identity(3);
    EXPECT_THROW(vdot_analytic(x, three_level_target(), m.system(), 2.0, q, &minus_one, v), NumericError);
    EXPECT_THROW(vdot_analytic(x, three_level_target(), m.system(), 0.01, q, nullptr, v), std::invalid_argument);
    EXPECT_THROW(vdot_analytic(x, three_level_target(), m.system(), 0.0, q, nullptr, std::vector<double>{0.1}),
                 std::invalid_argument);
}

TEST(TotalControls, AddsEtaGammaAndFeedback) {
    const ControlSystem sys(HermitianOperator::diagonal({0.0, 1.0}),
                            {{HermitianOperator(coupling(2, 0, 1)), 1.0, 0.25, true},
                             {HermitianOperator(coupling(2, 0, 1)), 1.0, -0.5, false}});
    const std::vector<double> v = {0.01, 0.02};
    const auto u = total_controls(sys, 0.1, v);
    EXPECT_DOUBLE_EQ(u[0], 0.25 + 0.1 + 0.01);
    EXPECT_DOUBLE_EQ(u[1], -0.5 + 0.02);
}

TEST(EscapeCheck, FiresOnlyAfterFullQuietDwell) {
    EscapePolicy p;  // dwell 1, v_eps 1e-6, gamma_eps 1e-6, alpha 0.5
    const auto quiet = flat_history(0.0, 1.0, 0.01, 0.004, 1e-8);
    const auto g = escape_check(quiet, p);
    ASSERT_TRUE(g.has_value());
    EXPECT_DOUBLE_EQ(*g, 0.002);

    const auto short_window = flat_history(0.5, 1.0, 0.01, 0.004, 1e-8);
    EXPECT_FALSE(escape_check(short_window, p).has_value());

    auto loud = quiet;
    loud[60].v[1] = 2e-6;
    EXPECT_FALSE(escape_check(loud, p).has_value());

    const auto tiny_gamma = flat_history(0.0, 1.0, 0.01, 1e-7, 1e-8);
    EXPECT_FALSE(escape_check(tiny_gamma, p).has_value());

    p.enabled = false;
    EXPECT_FALSE(escape_check(quiet, p).has_value());
}

TEST(EscapePolicy, Validation) {
    EscapePolicy p;
    EXPECT_NO_THROW(p.validate());
    p.alpha_fraction = 1.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = EscapePolicy{};
    p.dwell = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}
