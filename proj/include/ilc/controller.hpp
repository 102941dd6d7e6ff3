// controller.hpp: feedback laws, analytic Lyapunov derivative, escape rule.

#pragma once

#include "ilc/implicit_gamma.hpp"

#include <optional>
#include <span>

namespace ilc {

/// Monotone feedback shaping f_k: identity or a·tanh(x/a).
struct FeedbackShape {
    enum class Kind { identity, scaled_tanh };
    Kind kind = Kind::identity;
    double scale = 1.0;  // saturation level a for scaled_tanh

    static FeedbackShape identity() { return {}; }
    static FeedbackShape scaled_tanh(double a) {
        if (!(a > 0.0)) throw std::invalid_argument("FeedbackShape: tanh scale must be positive");
        return {Kind::scaled_tanh, a};
    }

    double operator()(double x) const {
        switch (kind) {
            case Kind::identity: return x;
            case Kind::scaled_tanh: return scale * std::tanh(x / scale);
        }
        return x;
    }
};

inline constexpr double kCommutatorImagTolerance = 1e-10;

/// x_k = i⟨[H_k, P]⟩ for every channel; each value is real for valid inputs.
template <class State>
std::vector<double> commutator_expectations(const State& s, const HermitianOperator& P,
                                            const ControlSystem& sys) {
    std::vector<double> x;
    x.reserve(sys.size());
    for (const auto& c : sys.channels()) {
        const Complex z = kI * expectation_complex(commutator(c.H, P), s);
        if (std::abs(z.imag()) > kCommutatorImagTolerance)
            throw NumericError("feedback: commutator expectation is not real (imag " +
                               std::to_string(z.imag()) + ")");
        x.push_back(z.real());
    }
    return x;
}

/// v_k = −K_k f_k(i⟨ψ|[H_k, P]|ψ⟩).
inline std::vector<double> feedback_v(const PureState& s, const MechanicalQuantity& q,
                                      const ControlSystem& sys,
                                      const FeedbackShape& shape = FeedbackShape::identity()) {
    std::vector<double> v = commutator_expectations(s, q.P, sys);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = -sys.channel(k).K * shape(v[k]);
    return v;
}

/// v_k = K_k f_k(i·tr([P, H_k] ρ)).
inline std::vector<double> feedback_v(const DensityMatrix& s, const MechanicalQuantity& q,
                                      const ControlSystem& sys,
                                      const FeedbackShape& shape = FeedbackShape::identity()) {
    std::vector<double> v = commutator_expectations(s, q.P, sys);
    // i·tr([P,H]ρ) = −i·tr([H,P]ρ)
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = sys.channel(k).K * shape(-v[k]);
    return v;
}

/// dV/dt including the implicit-γ prefactor
/// (1 + θ'⟨∂P⟩_f) / (1 − θ'(⟨∂P⟩ − ⟨∂P⟩_f)).
template <class State>
double vdot_analytic(const State& s, const State& target, const ControlSystem& sys,
                     double theta_prime, const MechanicalQuantity& q, const HermitianOperator* dP,
                     std::span<const double> v) {
    if (v.size() != sys.size()) throw std::invalid_argument("vdot_analytic: v size mismatch");
    const std::vector<double> x = commutator_expectations(s, q.P, sys);
    double drive = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) drive += v[k] * x[k];
    if (theta_prime == 0.0) return drive;
    if (dP == nullptr) throw std::invalid_argument("vdot_analytic: dP/dgamma required when theta' != 0");
    const double a = expectation(*dP, s);
    const double b = expectation(*dP, target);
    const double num = 1.0 + theta_prime * b;
    const double den = 1.0 - theta_prime * (a - b);
    if (!(den > 0.0) || !(num > 0.0))
        throw NumericError("vdot_analytic: non-positive prefactor (num " + std::to_string(num) +
                           ", den " + std::to_string(den) + "); theta violates the slope bound");
    return drive * num / den;
}

template <class State>
double vdot_analytic(const State& s, const State& target, const ControlSystem& sys,
                     const ThetaSpec& theta, const MechanicalQuantity& q, const HermitianOperator& dP,
                     std::span<const double> v) {
    const double tp = theta.derivative(lyapunov_value(q, s) - lyapunov_value(q, target));
    return vdot_analytic(s, target, sys, tp, q, &dP, v);
}

struct EscapePolicy {
    double v_eps = 1e-6;
    double gamma_eps = 1e-6;
    double dwell = 1.0;
    double alpha_fraction = 0.5;
    bool enabled = true;

    void validate() const {
        if (!(v_eps > 0.0) || !(gamma_eps > 0.0) || !(dwell > 0.0))
            throw std::invalid_argument("EscapePolicy: thresholds and dwell must be positive");
        if (!(alpha_fraction > 0.0 && alpha_fraction < 1.0))
            throw std::invalid_argument("EscapePolicy: alpha_fraction must lie in (0, 1)");
    }
};

struct ControlSample {
    double t = 0.0;
    double gamma = 0.0;
    std::vector<double> v;
    std::vector<double> u;  ///< η_k + γ·[k is γ-channel] + v_k
    double V = 0.0;
    double Vdot = 0.0;
    bool escape_active = false;
};

inline std::vector<double> total_controls(const ControlSystem& sys, double gamma,
                                          std::span<const double> v) {
    std::vector<double> u(sys.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
        const auto& c = sys.channel(k);
        u[k] = c.eta + (c.gamma_channel ? gamma : 0.0) + v[k];
    }
    return u;
}

/// γ̄(1 − α) if every sample in the last `dwell` of history has all |v_k| < v_eps
/// and γ > gamma_eps; history must cover the whole window.
inline std::optional<double> escape_check(std::span<const ControlSample> history,
                                          const EscapePolicy& policy) {
    if (!policy.enabled || history.empty()) return std::nullopt;
    const double t_end = history.back().t;
    const double t_start = t_end - policy.dwell;
    constexpr double slack = 1e-9;
    if (history.front().t > t_start + slack) return std::nullopt;
    for (auto it = history.rbegin(); it != history.rend() && it->t >= t_start - slack; ++it) {
        if (it->gamma <= policy.gamma_eps) return std::nullopt;
        for (double vk : it->v)
            if (std::abs(vk) >= policy.v_eps) return std::nullopt;
    }
    return history.back().gamma * (1.0 - policy.alpha_fraction);
}

}  // namespace ilc
