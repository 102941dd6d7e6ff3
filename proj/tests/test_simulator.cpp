#include "support.hpp"

#include <gtest/gtest.h>

using namespace ilc;
using namespace ilc::testing;

namespace {

const TrajectoryRecord<PureState>& golden_run() {
    static const TrajectoryRecord<PureState> rec = simulate(
        three_level_model(), PureState::basis(3, 2), three_level_target(), FeedbackShape::identity(),
        EscapePolicy{}, SimulationConfig{});
    return rec;
}

EscapePolicy escape_off() {
    EscapePolicy p;
    p.enabled = false;
    return p;
}

SimulationConfig horizon(double t_final, std::size_t stride = 1) {
    SimulationConfig c;
    c.t_final = t_final;
    c.record_stride = stride;
    return c;
}

}  // namespace

TEST(GoldenRun, ReachesTarget) {
    const auto& rec = golden_run();
    EXPECT_EQ(rec.size(), 30001u);
    EXPECT_FALSE(rec.stopped_on_fidelity);
    EXPECT_GE(rec.final_fidelity(), 0.95);
    const RealVector& p = rec.populations.back();
    EXPECT_NEAR(p(0), 2.0 / 3.0, 0.05);
    EXPECT_NEAR(p(1), 1.0 / 3.0, 0.05);
    EXPECT_NEAR(p(2), 0.0, 0.05);
    EXPECT_DOUBLE_EQ(rec.times.back(), 300.0);
}

TEST(GoldenRun, LyapunovDescentAndConservation) {
    const auto& rec = golden_run();
    const DescentSummary d = descent_summary(rec);
    EXPECT_EQ(d.increases, 0u);
    EXPECT_LE(d.max_increase, 1e-8);
    EXPECT_LE(rec.norm_drift, 1e-9);
    EXPECT_LE(rec.max_gamma_iterations, 30);
    for (const auto& s : rec.samples) EXPECT_LE(s.Vdot, 1e-12);
}

TEST(GoldenRun, GammaFollowsImplicitDefinition) {
    const auto& rec = golden_run();
    const LyapunovModel m = three_level_model();
    for (std::size_t i = 0; i < rec.size(); i += 2999) {
        const double g = rec.samples[i].gamma;
        EXPECT_NEAR(g, m.fixed_point_map(rec.states[i], three_level_target(), g), 1e-12);
    }
    EXPECT_NEAR(rec.samples.front().gamma, 0.0049992809801683242, 1e-10);
}

TEST(GoldenRun, RecordedControlsDecompose) {
    const auto& rec = golden_run();
    const auto& s = rec.samples[1234];
    EXPECT_DOUBLE_EQ(s.u[0], kEta1 + s.gamma + s.v[0]);
    EXPECT_DOUBLE_EQ(s.u[1], s.gamma + s.v[1]);
}

TEST(GoldenRun, FineStepVdotMatchesFivepointDifferences) {
    // At dt = 1e-3 the five-point stencil is accurate enough to resolve V̇ itself.
    SimulationConfig c = horizon(30.0);
    c.dt = 1e-3;
    const auto rec = simulate(three_level_model(), PureState::basis(3, 2), three_level_target(),
                              FeedbackShape::identity(), EscapePolicy{}, c);
    std::size_t agree = 0, total = 0;
    for (std::size_t i = 2; i + 2 < rec.size(); ++i) {
        const auto& s = rec.samples;
        const double fd = (-s[i + 2].V + 8 * s[i + 1].V - 8 * s[i - 1].V + s[i - 2].V) / (12 * c.dt);
        const double err = std::abs(fd - s[i].Vdot);
        ++total;
        if (err <= 1e-4 * std::abs(s[i].Vdot) || err <= 1e-10) ++agree;
    }
    EXPECT_GE(double(agree) / double(total), 0.99);
}

TEST(Simulate, OneStepGivesTwoRows) {
    const auto rec = simulate(three_level_model(), PureState::basis(3, 2), three_level_target(),
                              FeedbackShape::identity(), EscapePolicy{}, horizon(0.01));
    EXPECT_EQ(rec.size(), 2u);
    EXPECT_DOUBLE_EQ(rec.times[1], 0.01);
}

TEST(Simulate, StrideKeepsFinalSample) {
    const auto rec = simulate(three_level_model(), PureState::basis(3, 2), three_level_target(),
                              FeedbackShape::identity(), EscapePolicy{}, horizon(1.05, 10));
    ASSERT_EQ(rec.size(), 12u);
    EXPECT_NEAR(rec.times.back(), 1.05, 1e-12);
    EXPECT_NEAR(rec.times[10], 1.0, 1e-12);
}

TEST(Simulate, StartingOnTargetGivesZeroFeedback) {
    SimulationConfig c = horizon(5.0);
    c.stop_fidelity = std::numeric_limits<double>::infinity();
    const auto rec = simulate(three_level_model(), three_level_target(), three_level_target(),
                              FeedbackShape::identity(), EscapePolicy{}, c);
    for (const auto& s : rec.samples) {
        EXPECT_EQ(s.gamma, 0.0);
        for (double v : s.v) EXPECT_LE(std::abs(v), 1e-13);
    }
    EXPECT_GE(rec.final_fidelity(), 1.0 - 1e-12);
}

TEST(Simulate, StopsEarlyOnFidelity) {
    const auto rec = simulate(three_level_model(), three_level_target(), three_level_target(),
                              FeedbackShape::identity(), EscapePolicy{}, horizon(5.0));
    EXPECT_TRUE(rec.stopped_on_fidelity);
    EXPECT_EQ(rec.size(), 1u);
}

TEST(Simulate, RejectsBadInputs) {
    const LyapunovModel m = three_level_model();
    SimulationConfig c;
    c.dt = 0.0;
    EXPECT_THROW(simulate(m, PureState::basis(3, 2), three_level_target(), FeedbackShape::identity(),
                          EscapePolicy{}, c), std::invalid_argument);
    EXPECT_THROW(simulate(m, PureState::basis(2, 0), three_level_target(), FeedbackShape::identity(),
                          EscapePolicy{}, SimulationConfig{}), std::invalid_argument);
    const LyapunovModel dup(m.system(), SpectrumSpec::unvalidated({0.1, 0.4, 0.4}), m.theta());
    EXPECT_THROW(simulate(dup, PureState::basis(3, 2), three_level_target(), FeedbackShape::identity(),
                          EscapePolicy{}, SimulationConfig{}), std::invalid_argument);
}

TEST(Simulate, AbortCarriesStepContext) {
    // Degenerate bare drift: no dressed frame can be matched once γ > 0.
    const ControlSystem sys(HermitianOperator::diagonal({0.0, 0.0}),
                            {{HermitianOperator(coupling(2, 0, 1)), 1.0, 0.0, true}});
    const LyapunovModel m(sys, SpectrumSpec::unvalidated({0.1, 0.4}), ThetaSpec(0.01, 0.1));
    try {
        simulate(m, PureState::basis(2, 1), PureState::basis(2, 0), FeedbackShape::identity(), EscapePolicy{},
                 horizon(1.0));
        ADD_FAILURE() << "run completed without a numeric failure";
    } catch (const SimulationError& e) {
        EXPECT_EQ(e.step(), 0u);
        EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos);
    }
}

TEST(Simulate, Deterministic) {
    const LyapunovModel m = three_level_model();
    const auto a = simulate(m, PureState::basis(3, 2), three_level_target(), FeedbackShape::identity(),
                            EscapePolicy{}, horizon(20.0));
    const auto b = simulate(m, PureState::basis(3, 2), three_level_target(), FeedbackShape::identity(),
                            EscapePolicy{}, horizon(20.0));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.samples[i].V, b.samples[i].V);
        EXPECT_EQ(a.fidelities[i], b.fidelities[i]);
    }
}

TEST(InvariantSetE1, MembersAreStationaryAndTargetMinimal) {
    const LyapunovModel m = three_level_model();
    for (double g : {0.0, 0.003, 0.05, 0.1}) {
        const auto set = enumerate_invariant_set(m, three_level_target(), g);
        ASSERT_EQ(set.members.size(), 3u);
        for (const auto& mem : set.members) EXPECT_LE(mem.max_feedback, 1e-12);
        EXPECT_EQ(set.target_member, 0u);
        EXPECT_TRUE(set.target_strictly_minimal);
        EXPECT_NEAR(set.members[0].V, 0.1, 1e-12);
    }
}

TEST(InvariantSetE1, StationaryMembersHoldWithoutEscape) {
    const LyapunovModel m = three_level_model();
    for (std::size_t dir : {1u, 2u}) {
        const StationaryMember mem = locate_stationary_member(m, three_level_target(), dir);
        EXPECT_NEAR(mem.gamma, m.theta()(m.spectrum()[dir] - lyapunov_value(m.quantity(mem.gamma), three_level_target())), 1e-12);
        const auto rec = simulate(m, mem.state, three_level_target(), FeedbackShape::identity(), escape_off(), horizon(50.0));
        double worst = 0.0;
        for (const auto& s : rec.states) worst = std::max(worst, 1.0 - fidelity(s, mem.state));
        EXPECT_LE(worst, 1e-6) << "direction " << dir;
    }
    EXPECT_THROW(locate_stationary_member(m, three_level_target(), 3), std::out_of_range);
}

TEST(InvariantSetE1, EscapeReleasesFromUpperMember) {
    const LyapunovModel m = three_level_model();
    const StationaryMember mem = locate_stationary_member(m, three_level_target(), 2);
    const double V_member = m.spectrum()[2];
    const EscapePolicy p;
    const auto rec = simulate(m, mem.state, three_level_target(), FeedbackShape::identity(), p,
                              horizon(1.0 + 10.0 * p.dwell));
    ASSERT_FALSE(rec.escapes.empty());
    ASSERT_TRUE(rec.escapes.front().t_released.has_value());
    EXPECT_LE(*rec.escapes.front().t_released - rec.escapes.front().t_activated, 10.0 * p.dwell);
    EXPECT_DOUBLE_EQ(rec.escapes.front().gamma_override, rec.escapes.front().gamma_before * (1.0 - p.alpha_fraction));
    EXPECT_LT(rec.samples.back().V, V_member);
    EXPECT_FALSE(rec.non_escape);
}

TEST(InvariantSetE1, SaddleMemberIsFlaggedAsNonEscape) {
    // On the middle branch halving γ raises V, so the override is never released.
    const LyapunovModel m = three_level_model();
    const StationaryMember mem = locate_stationary_member(m, three_level_target(), 1);
    const auto rec = simulate(m, mem.state, three_level_target(), FeedbackShape::identity(), EscapePolicy{},
                              horizon(12.5));
    ASSERT_FALSE(rec.escapes.empty());
    EXPECT_FALSE(rec.escapes.front().t_released.has_value());
    EXPECT_TRUE(rec.non_escape);
    for (const auto& s : rec.samples)
        if (s.t > rec.escapes.front().t_activated) EXPECT_TRUE(s.escape_active);
}

TEST(InvariantSetE2, DistinctArrangementsAndTargetMinimal) {
    const ControlSystem sys = three_level();
    const DensityMatrix target = DensityMatrix::diagonal({2.0 / 3, 1.0 / 3, 0.0});
    const LyapunovModel m(sys, design_spectrum_density(target, reference_frame(sys)), ThetaSpec(0.01, 0.1));
    for (double g : {0.0, 0.02, 0.1}) {
        const auto set = enumerate_invariant_set(m, target, g);
        EXPECT_EQ(set.members.size(), 6u);
        EXPECT_TRUE(set.target_strictly_minimal);
        for (const auto& mem : set.members) EXPECT_LE(mem.max_feedback, 1e-12);
    }
    const DensityMatrix repeated = DensityMatrix::diagonal({0.5, 0.25, 0.25});
    const LyapunovModel m2(sys, design_spectrum_density(repeated, reference_frame(sys)), ThetaSpec(0.01, 0.1));
    EXPECT_EQ(enumerate_invariant_set(m2, repeated, 0.0).members.size(), 3u);
}

TEST(Liouville, ConservesTraceAndSpectrumAndDescends) {
    const ControlSystem sys = three_level();
    const DensityMatrix target = DensityMatrix::diagonal({2.0 / 3, 1.0 / 3, 0.0});
    const DensityMatrix initial = DensityMatrix::diagonal({0.0, 1.0 / 3, 2.0 / 3});
    const LyapunovModel m(sys, design_spectrum_density(target, reference_frame(sys)), ThetaSpec(0.01, 0.1));
    SimulationConfig c = horizon(60.0);
    c.equation = Equation::liouville;
    const auto rec = simulate(m, initial, target, FeedbackShape::identity(), EscapePolicy{}, c);
    EXPECT_LE(rec.norm_drift, 1e-9);
    EXPECT_LE(rec.spectrum_drift, 1e-7);
    EXPECT_EQ(descent_summary(rec).increases, 0u);
    EXPECT_GT(rec.final_fidelity(), rec.fidelities.front());
}

TEST(Conditions, GoldenModelPassesOnGridAndCommutes) {
    const LyapunovModel m = three_level_model();
    const ConvergenceReport r = check_convergence_conditions(m, gamma_grid(0.1));
    EXPECT_TRUE(r.all_pass());
    for (const auto& e : r.entries) EXPECT_LE(e.commutator_norm, 1e-10);
}

TEST(Conditions, CoincidentSpectrumFailsConditionFour) {
    const LyapunovModel good = three_level_model();
    const LyapunovModel dup(good.system(), SpectrumSpec::unvalidated({0.1, 0.4, 0.4}), good.theta());
    const ConvergenceReport r = check_convergence_conditions(dup, gamma_grid(0.1, 10));
    EXPECT_FALSE(r.distinct_P);
    EXPECT_EQ(r.coincident_P_at.size(), 10u);
    EXPECT_TRUE(r.commutes);
}

TEST(Conditions, BareSystemAtZeroIsDisconnected) {
    const LyapunovModel bare(three_level(), design_spectrum_pure(0, 3), ThetaSpec(0.01, 0.1));
    const ConvergenceReport r = check_convergence_conditions(bare, {0.0, 0.05});
    EXPECT_FALSE(r.connected);
    EXPECT_EQ(r.disconnected_at, std::vector<double>{0.0});
    EXPECT_EQ(r.entries[0].missing_pairs, (std::vector<LevelPair>{{1, 2}}));
}
