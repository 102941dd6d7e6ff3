// simulator.hpp: closed-loop propagation, trajectory recording, invariant sets and
// convergence-condition checks.

#pragma once

#include "ilc/controller.hpp"


namespace ilc {

enum class Equation { schrodinger, liouville };

struct SimulationConfig {
    double dt = 0.01;
    double t_final = 300.0;
    Equation equation = Equation::schrodinger;
    std::size_t record_stride = 1;
    double stop_fidelity = 1.0 - 1e-6;  ///< early exit once reached

    std::size_t steps() const {
        if (!(dt > 0.0)) throw std::invalid_argument("SimulationConfig: dt must be positive");
        if (!(t_final >= dt * (1.0 - 1e-12)))
            throw std::invalid_argument("SimulationConfig: t_final must be >= dt");
        if (record_stride == 0) throw std::invalid_argument("SimulationConfig: record_stride must be >= 1");
        return static_cast<std::size_t>(std::llround(t_final / dt));
    }
};

struct EscapeEvent {
    double t_activated = 0.0;
    double gamma_before = 0.0;
    double gamma_override = 0.0;
    double V_at_activation = 0.0;
    std::optional<double> t_released;
};

template <class State>
struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<RealVector> populations;
    std::vector<State> states;
    std::vector<ControlSample> samples;
    std::vector<double> fidelities;
    std::vector<EscapeEvent> escapes;
    bool non_escape = false;          ///< an override never released within 10 dwell times
    bool stopped_on_fidelity = false;
    std::size_t steps_taken = 0;
    double norm_drift = 0.0;      ///< pure: max |‖ψ‖ − 1|; density: max |tr ρ − 1|
    double spectrum_drift = 0.0;  ///< density only: max eigenvalue deviation from ρ(0)
    int max_gamma_iterations = 0;

    std::size_t size() const noexcept { return times.size(); }
    double final_fidelity() const { return fidelities.empty() ? 0.0 : fidelities.back(); }
};

/// Any module error raised inside the loop, annotated with the step and last sample.
class SimulationError : public NumericError {
public:
    SimulationError(std::size_t step, const std::string& what) : NumericError(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

namespace detail {

inline double norm_error(const PureState& s) { return std::abs(s.amplitudes().norm() - 1.0); }
inline double norm_error(const DensityMatrix& s) {
    return std::abs(s.matrix().trace() - Complex(1.0, 0.0));
}

struct ControlEval {
    double gamma = 0.0;
    MechanicalQuantity q;
    double V = 0.0, V_target = 0.0, theta_prime = 0.0;
    int iterations = 0;
    std::vector<double> v;
};

inline std::string describe(const ControlSample& s) {
    std::ostringstream o;
    o << "t=" << s.t << " gamma=" << s.gamma << " V=" << s.V << " Vdot=" << s.Vdot << " v=[";
    for (std::size_t k = 0; k < s.v.size(); ++k) o << (k ? "," : "") << s.v[k];
    o << "] u=[";
    for (std::size_t k = 0; k < s.u.size(); ++k) o << (k ? "," : "") << s.u[k];
    o << "] escape=" << s.escape_active;
    return o.str();
}

}  // namespace detail

/// Fixed-step closed loop. Each step evaluates γ, P_γ and v at the current state
/// (the recorded sample), then holds the controls evaluated at the predicted
/// half-step state constant over dt and applies the exact exponential.
template <class State>
TrajectoryRecord<State> simulate(const LyapunovModel& model, const State& initial, const State& target,
                                 const FeedbackShape& shape, const EscapePolicy& policy,
                                 const SimulationConfig& config) {
    const ControlSystem& sys = model.system();
    if (initial.dim() != sys.dim() || target.dim() != sys.dim())
        throw std::invalid_argument("simulate: state dimension mismatch");
    if (policy.enabled) policy.validate();
    if (auto why = SpectrumSpec::violation(model.spectrum().values()))
        throw std::invalid_argument("simulate: invalid spectrum: " + *why);
    const std::size_t n_steps = config.steps();
    const double dt = config.dt;

    TrajectoryRecord<State> rec;
    std::vector<ControlSample> history;
    std::optional<double> override_gamma;
    double V_activation = 0.0;
    double warm = 0.0;
    RealVector spectrum0;
    if constexpr (std::is_same_v<State, DensityMatrix>) spectrum0 = hermitian_eigenvalues(initial.op());

    auto controls_at = [&](const State& s, double warm_gamma, std::optional<double> ov) {
        detail::ControlEval e;
        if (ov) {
            const GammaSolution g = model.evaluate(s, target, *ov);
            e.gamma = *ov;
            e.q = g.P;
            e.V = g.V;
            e.V_target = g.V_target;
            e.theta_prime = 0.0;  // γ is held fixed
        } else {
            const GammaSolution g = model.solve_gamma(s, target, warm_gamma);
            e.gamma = g.gamma;
            e.q = g.P;
            e.V = g.V;
            e.V_target = g.V_target;
            e.theta_prime = g.theta_prime;
            e.iterations = g.iterations;
        }
        e.v = feedback_v(s, e.q, sys, shape);
        return e;
    };

    State state = initial;
    ControlSample last;
    std::size_t step = 0;
    try {
        for (step = 0;; ++step) {
            const double t = static_cast<double>(step) * dt;
            detail::ControlEval ev = controls_at(state, warm, override_gamma);
            bool transition = false;
            if (override_gamma && ev.V < V_activation - policy.v_eps) {
                override_gamma.reset();
                rec.escapes.back().t_released = t;
                ev = controls_at(state, warm, std::nullopt);
                transition = true;
                history.clear();
            }
            if (override_gamma && !rec.escapes.empty() &&
                t - rec.escapes.back().t_activated > 10.0 * policy.dwell)
                rec.non_escape = true;
            rec.max_gamma_iterations = std::max(rec.max_gamma_iterations, ev.iterations);

            ControlSample sample;
            sample.t = t;
            sample.gamma = ev.gamma;
            sample.v = ev.v;
            sample.u = total_controls(sys, ev.gamma, ev.v);
            sample.V = ev.V;
            if (ev.theta_prime != 0.0) {
                const HermitianOperator dP = model.dP_dgamma(ev.gamma);
                sample.Vdot = vdot_analytic(state, target, sys, ev.theta_prime, ev.q, &dP, sample.v);
            } else {
                sample.Vdot = vdot_analytic(state, target, sys, 0.0, ev.q, nullptr, sample.v);
            }
            sample.escape_active = override_gamma.has_value() || transition;
            last = sample;

            const double fid = fidelity(state, target);
            rec.norm_drift = std::max(rec.norm_drift, detail::norm_error(state));
            if constexpr (std::is_same_v<State, DensityMatrix>)
                rec.spectrum_drift = std::max(
                    rec.spectrum_drift,
                    (hermitian_eigenvalues(state.op()) - spectrum0).cwiseAbs().maxCoeff());

            const bool stop_fid = fid >= config.stop_fidelity;
            const bool final_step = step == n_steps || stop_fid;
            if (step % config.record_stride == 0 || final_step) {
                rec.times.push_back(t);
                rec.populations.push_back(state.populations());
                rec.states.push_back(state);
                rec.samples.push_back(sample);
                rec.fidelities.push_back(fid);
            }
            if (final_step) {
                rec.stopped_on_fidelity = stop_fid && step < n_steps;
                rec.steps_taken = step;
                break;
            }

            if (!override_gamma && policy.enabled) {
                history.push_back(sample);
                std::size_t drop = 0;
                while (drop + 1 < history.size() && history[drop + 1].t <= t - policy.dwell + 1e-9)
                    ++drop;
                history.erase(history.begin(), history.begin() + static_cast<std::ptrdiff_t>(drop));
                if (auto g = escape_check(history, policy)) {
                    override_gamma = *g;
                    V_activation = sample.V;
                    rec.escapes.push_back({t, sample.gamma, *g, sample.V, std::nullopt});
                    history.clear();
                }
            }

            warm = ev.gamma;
            const HermitianOperator h_now = sys.total_hamiltonian(sample.u);
            const State half = propagate_step(h_now, 0.5 * dt, state);
            const detail::ControlEval mid = controls_at(half, ev.gamma, override_gamma);
            const std::vector<double> u_mid = total_controls(sys, mid.gamma, mid.v);
            state = propagate_step(sys.total_hamiltonian(u_mid), dt, state);
        }
    } catch (const SimulationError&) {
        throw;
    } catch (const std::exception& e) {
        throw SimulationError(step, "simulation aborted at step " + std::to_string(step) + " (" +
                                        detail::describe(last) + "): " + e.what());
    }
    return rec;
}

template <class State>
TrajectoryRecord<State> simulate(const ControlSystem& sys, const State& initial, const State& target,
                                 const ThetaSpec& theta, const SpectrumSpec& spectrum,
                                 const FeedbackShape& shape, const EscapePolicy& policy,
                                 const SimulationConfig& config) {
    return simulate(LyapunovModel(sys, spectrum, theta), initial, target, shape, policy, config);
}

// ---------------------------------------------------------------------------
// Invariant sets
// ---------------------------------------------------------------------------

enum class InvariantKind { E1, E2 };

template <class State>
struct InvariantMember {
    State state;
    double V = 0.0;
    double max_feedback = 0.0;           ///< max_k |v_k| at the member
    std::vector<std::size_t> placement;  ///< E1: {direction}; E2: population index per direction
};

template <class State>
struct InvariantSet {
    InvariantKind kind = InvariantKind::E1;
    double gamma = 0.0;
    std::vector<InvariantMember<State>> members;
    std::size_t target_member = 0;
    bool target_strictly_minimal = false;
};

/// E1: the N dressed eigendirections at `gamma` (up to phase).
inline InvariantSet<PureState> enumerate_invariant_set(const LyapunovModel& model,
                                                       const PureState& target, double gamma) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("enumerate_invariant_set: gamma must be >= 0");
    InvariantSet<PureState> set;
    set.kind = InvariantKind::E1;
    set.gamma = gamma;
    const MechanicalQuantity q = model.quantity(gamma);
    for (std::size_t j = 0; j < q.frame.dim(); ++j) {
        InvariantMember<PureState> m{PureState::normalized(q.frame.direction(j)), 0.0, 0.0, {j}};
        m.V = lyapunov_value(q, m.state);
        for (double vk : feedback_v(m.state, q, model.system())) m.max_feedback = std::max(m.max_feedback, std::abs(vk));
        set.members.push_back(std::move(m));
    }
    set.target_member = target_direction(q.frame, target);
    set.target_strictly_minimal = true;
    for (std::size_t j = 0; j < set.members.size(); ++j)
        if (j != set.target_member && !(set.members[set.target_member].V < set.members[j].V))
            set.target_strictly_minimal = false;
    return set;
}

/// E2 for a target diagonal in the γ = 0 dressed frame: every distinct
/// arrangement of its populations over the dressed directions at `gamma`.
inline InvariantSet<DensityMatrix> enumerate_invariant_set(const LyapunovModel& model,
                                                           const DensityMatrix& target, double gamma) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("enumerate_invariant_set: gamma must be >= 0");
    const RealVector pop = frame_populations(target, model.reference());
    const std::size_t n = static_cast<std::size_t>(pop.size());
    InvariantSet<DensityMatrix> set;
    set.kind = InvariantKind::E2;
    set.gamma = gamma;
    const MechanicalQuantity q = model.quantity(gamma);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<RealVector> seen;
    do {
        RealVector arranged(static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n; ++j)
            arranged(static_cast<Eigen::Index>(j)) = pop(static_cast<Eigen::Index>(perm[j]));
        bool duplicate = false;
        for (const auto& s : seen)
            if ((s - arranged).cwiseAbs().maxCoeff() <= 1e-14) duplicate = true;
        if (duplicate) continue;
        seen.push_back(arranged);
        const ComplexMatrix rho =
            q.frame.basis * arranged.cast<Complex>().asDiagonal() * q.frame.basis.adjoint();
        InvariantMember<DensityMatrix> m{DensityMatrix(rho), 0.0, 0.0, perm};
        m.V = lyapunov_value(q, m.state);
        for (double vk : feedback_v(m.state, q, model.system()))
            m.max_feedback = std::max(m.max_feedback, std::abs(vk));
        set.members.push_back(std::move(m));
    } while (std::next_permutation(perm.begin(), perm.end()));

    set.target_member = 0;  // identity arrangement comes first
    set.target_strictly_minimal = true;
    for (std::size_t j = 1; j < set.members.size(); ++j)
        if (!(set.members[0].V < set.members[j].V)) set.target_strictly_minimal = false;
    return set;
}

/// Self-consistent stationary point on eigenbranch `direction`: γ̄ = θ(P_l − V_γ̄(target))
/// and the state |φ_{l,γ̄}⟩. Starting the loop there keeps v ≡ 0.
struct StationaryMember {
    double gamma = 0.0;
    PureState state;
};

inline StationaryMember locate_stationary_member(const LyapunovModel& model, const PureState& target,
                                                 std::size_t direction) {
    if (direction >= model.system().dim())
        throw std::out_of_range("locate_stationary_member: direction out of range");
    const double p_l = model.spectrum()[direction];
    double gamma = 0.0;
    for (int it = 0; it < kGammaIterationCap; ++it) {
        const MechanicalQuantity q = model.quantity(gamma);
        const double next = model.theta()(p_l - lyapunov_value(q, target));
        if (std::abs(next - gamma) <= kGammaTolerance) {
            return {next, PureState::normalized(model.quantity(next).frame.direction(direction))};
        }
        gamma = next;
    }
    throw NumericError("locate_stationary_member: no convergence");
}

// ---------------------------------------------------------------------------
// Convergence conditions
// ---------------------------------------------------------------------------

struct ConditionEntry {
    double gamma = 0.0;
    bool regular = false;           // i
    bool connected = false;         // ii
    std::vector<LevelPair> missing_pairs;
    double commutator_norm = 0.0;   // iii: ‖[P_γ, dressed drift]‖_max
    bool commutes = false;
    bool distinct_P = false;        // iv
    bool ill_conditioned = false;
    std::string error;              // frame matching failure, if any
};

struct ConvergenceReport {
    std::vector<ConditionEntry> entries;
    bool regular = true, connected = true, commutes = true, distinct_P = true;
    std::vector<double> irregular_at, disconnected_at, noncommuting_at, coincident_P_at, failed_at;

    bool all_pass() const {
        return regular && connected && commutes && distinct_P && failed_at.empty();
    }
};

inline constexpr double kCommutationTolerance = 1e-10;

inline ConvergenceReport check_convergence_conditions(const LyapunovModel& model,
                                                      const std::vector<double>& grid,
                                                      double tol = kDegeneracyTolerance) {
    ConvergenceReport rep;
    for (double g : grid) {
        if (g < 0.0 || g > model.theta().gamma_max)
            throw std::invalid_argument("check_convergence_conditions: grid point outside [0, gamma_max]");
        ConditionEntry e;
        e.gamma = g;
        try {
            const MechanicalQuantity q = model.quantity(g);
            const DegeneracyReport d = connectivity_in_frame(model.system(), q.frame, tol);
            e.regular = d.strongly_regular;
            e.connected = d.fully_connected;
            e.missing_pairs = d.missing_pairs;
            e.ill_conditioned = d.ill_conditioned;
            e.commutator_norm =
                max_abs(commutator(q.P.matrix(), dressed_drift(model.system(), g).matrix()));
            e.commutes = e.commutator_norm <= kCommutationTolerance;
            const RealVector diag = q.frame.transform(q.P.matrix()).diagonal().real();
            e.distinct_P = true;
            for (Eigen::Index a = 0; a < diag.size(); ++a)
                for (Eigen::Index b = a + 1; b < diag.size(); ++b)
                    if (std::abs(diag(a) - diag(b)) <= tol) e.distinct_P = false;
        } catch (const NumericError& err) {
            e.error = err.what();
            rep.failed_at.push_back(g);
        }
        if (e.error.empty()) {
            if (!e.regular) { rep.regular = false; rep.irregular_at.push_back(g); }
            if (!e.connected) { rep.connected = false; rep.disconnected_at.push_back(g); }
            if (!e.commutes) { rep.commutes = false; rep.noncommuting_at.push_back(g); }
            if (!e.distinct_P) { rep.distinct_P = false; rep.coincident_P_at.push_back(g); }
        }
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Trajectory diagnostics
// ---------------------------------------------------------------------------

struct DescentSummary {
    double max_increase = -std::numeric_limits<double>::infinity();  ///< max V(t+dt) − V(t)
    std::size_t increases = 0;   ///< steps above the tolerance
    std::size_t steps = 0;       ///< steps compared (both ends outside escape overrides)
    std::size_t fd_checked = 0;  ///< interior samples compared with centered differences
    std::size_t fd_agree = 0;
    double fd_fraction() const { return fd_checked ? double(fd_agree) / double(fd_checked) : 0.0; }
};

/// Monotonicity of V and agreement of the recorded V̇ with (V(t+dt) − V(t−dt)) / 2dt.
/// Samples inside escape overrides are excluded; the record must be unstrided.
template <class State>
DescentSummary descent_summary(const TrajectoryRecord<State>& rec, double descent_tol = 1e-8,
                               double fd_rel = 1e-4, double fd_abs = 1e-10) {
    DescentSummary d;
    const auto& s = rec.samples;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i].escape_active || s[i + 1].escape_active) continue;
        const double inc = s[i + 1].V - s[i].V;
        d.max_increase = std::max(d.max_increase, inc);
        ++d.steps;
        if (inc > descent_tol) ++d.increases;
    }
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i - 1].escape_active || s[i].escape_active || s[i + 1].escape_active) continue;
        const double h = s[i + 1].t - s[i - 1].t;
        const double fd = (s[i + 1].V - s[i - 1].V) / h;
        const double err = std::abs(fd - s[i].Vdot);
        ++d.fd_checked;
        if (err <= fd_rel * std::abs(s[i].Vdot) || err <= fd_abs) ++d.fd_agree;
    }
    return d;
}

}  // namespace ilc
