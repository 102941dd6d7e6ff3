// implicit_gamma.hpp: imaginary mechanical quantity P_γ, Lyapunov value, and the
// implicit perturbation γ = θ(V_γ(state) − V_γ(target)).

#pragma once

#include "ilc/model_design.hpp"

#include <limits>

namespace ilc {

/// θ(s) = clamp(slope·s, 0, γ*).
struct ThetaSpec {
    double slope = 0.01;
    double gamma_max = 0.1;

    ThetaSpec() = default;
    ThetaSpec(double c, double gmax) : slope(c), gamma_max(gmax) {
        if (!(slope > 0.0) || !std::isfinite(slope))
            throw std::invalid_argument("ThetaSpec: slope must be positive");
        if (!(gamma_max > 0.0) || !std::isfinite(gamma_max))
            throw std::invalid_argument("ThetaSpec: gamma_max must be positive");
    }

    double operator()(double s) const { return std::clamp(slope * s, 0.0, gamma_max); }

    /// θ'(s); zero where the clamp is active.
    double derivative(double s) const {
        const double x = slope * s;
        return (x > 0.0 && x < gamma_max) ? slope : 0.0;
    }
};

/// P = Σ_j P_j |φ_j⟩⟨φ_j| together with the frame and spectrum it was built from.
struct MechanicalQuantity {
    HermitianOperator P;
    EigenFrame frame;
    SpectrumSpec spectrum;
};

inline MechanicalQuantity build_P(const EigenFrame& frame, const SpectrumSpec& spectrum) {
    if (spectrum.size() != frame.dim()) throw std::invalid_argument("build_P: spectrum length != N");
    RealVector p(static_cast<Eigen::Index>(spectrum.size()));
    for (std::size_t j = 0; j < spectrum.size(); ++j) p(static_cast<Eigen::Index>(j)) = spectrum[j];
    const ComplexMatrix m = frame.basis * p.cast<Complex>().asDiagonal() * frame.basis.adjoint();
    return {HermitianOperator(m), frame, spectrum};
}

template <class State>
double lyapunov_value(const MechanicalQuantity& q, const State& s) {
    return expectation(q.P, s);
}

struct GammaSolution {
    double gamma = 0.0;
    double residual = 0.0;
    int iterations = 0;
    MechanicalQuantity P;
    double V = 0.0;
    double V_target = 0.0;
    double theta_prime = 0.0;  ///< θ' at V − V_target
};

struct ThetaValidation {
    double C = 0.0;       ///< max over the grid of ‖∂P_γ/∂γ‖₂
    double C_star = 1.0;  ///< 1 + C
    double bound = 0.5;   ///< 1 / (2 C*)
    bool valid = false;   ///< slope < bound
    double worst_gamma = 0.0;
};

inline constexpr double kGammaTolerance = 1e-12;
inline constexpr int kGammaIterationCap = 200;
inline constexpr double kDerivativeStep = 1e-6;

/// A control system together with its spectrum and θ: everything needed to
/// evaluate P_γ along a continuity-tracked eigenframe.
class LyapunovModel {
public:
    LyapunovModel(ControlSystem sys, SpectrumSpec spectrum, ThetaSpec theta)
        : sys_(std::move(sys)), spectrum_(std::move(spectrum)), theta_(theta),
          reference_(reference_frame(sys_)) {
        if (spectrum_.size() != sys_.dim())
            throw std::invalid_argument("LyapunovModel: spectrum length != N");
    }

    const ControlSystem& system() const noexcept { return sys_; }
    const SpectrumSpec& spectrum() const noexcept { return spectrum_; }
    const ThetaSpec& theta() const noexcept { return theta_; }
    const EigenFrame& reference() const noexcept { return reference_; }

    EigenFrame frame(double gamma) const {
        if (gamma == 0.0) return reference_;
        return build_frame(sys_, gamma, &reference_);
    }

    MechanicalQuantity quantity(double gamma) const { return build_P(frame(gamma), spectrum_); }

    /// ∂P_γ/∂γ by central differences; second-order one-sided at 0 and γ*.
    HermitianOperator dP_dgamma(double gamma, double h = kDerivativeStep) const {
        return dP_dgamma_bounded(gamma, h, theta_.gamma_max);
    }

    HermitianOperator dP_dgamma_bounded(double gamma, double h, double upper) const {
        if (!(h > 0.0)) throw std::invalid_argument("dP_dgamma: h must be positive");
        auto P = [&](double g) { return quantity(g).P.matrix(); };
        ComplexMatrix d;
        if (gamma - h < 0.0)
            d = (-3.0 * P(gamma) + 4.0 * P(gamma + h) - P(gamma + 2 * h)) / (2 * h);
        else if (gamma + h > upper)
            d = (3.0 * P(gamma) - 4.0 * P(gamma - h) + P(gamma - 2 * h)) / (2 * h);
        else
            d = (P(gamma + h) - P(gamma - h)) / (2 * h);
        return HermitianOperator(0.5 * (d + d.adjoint()));
    }

    /// g(γ) = θ(V_γ(state) − V_γ(target)).
    template <class State>
    double fixed_point_map(const State& state, const State& target, double gamma) const {
        const MechanicalQuantity q = quantity(gamma);
        return theta_(lyapunov_value(q, state) - lyapunov_value(q, target));
    }

    /// Solves γ = g(γ) by fixed-point iteration from `warm_start`, falling back to
    /// bisection on γ − g(γ) if the iteration stalls.
    template <class State>
    GammaSolution solve_gamma(const State& state, const State& target, double warm_start = 0.0,
                              double tol = kGammaTolerance) const {
        double gamma = std::clamp(std::isfinite(warm_start) ? warm_start : 0.0, 0.0, theta_.gamma_max);
        double prev_residual = std::numeric_limits<double>::infinity();
        int slow = 0;
        for (int it = 1; it <= kGammaIterationCap; ++it) {
            GammaSolution sol = evaluate(state, target, gamma);
            sol.iterations = it;
            if (sol.residual <= tol) return sol;
            const double next = theta_(sol.V - sol.V_target);
            slow = (sol.residual > 0.5 * prev_residual) ? slow + 1 : 0;
            prev_residual = sol.residual;
            if (slow >= 20) return bisect(state, target, tol, it);
            gamma = next;
        }
        throw NumericError("solve_gamma: no convergence after " +
                           std::to_string(kGammaIterationCap) +
                           " iterations (theta likely violates the slope bound)");
    }

    /// C, C* and the slope check over a γ grid.
    ThetaValidation validate_theta(const std::vector<double>& grid,
                                   double h = kDerivativeStep) const {
        ThetaValidation v;
        for (double g : grid) {
            if (g < 0.0 || g > theta_.gamma_max)
                throw std::invalid_argument("validate_theta: grid point outside [0, gamma_max]");
            const double norm = operator_norm(dP_dgamma(g, h));
            if (norm > v.C) {
                v.C = norm;
                v.worst_gamma = g;
            }
        }
        v.C_star = 1.0 + v.C;
        v.bound = 1.0 / (2.0 * v.C_star);
        v.valid = theta_.slope < v.bound;
        return v;
    }

    static double operator_norm(const HermitianOperator& a) {
        return eig_hermitian(a).eigenvalues.cwiseAbs().maxCoeff();
    }

    template <class State>
    GammaSolution evaluate(const State& state, const State& target, double gamma) const {
        GammaSolution sol;
        sol.gamma = gamma;
        sol.P = quantity(gamma);
        sol.V = lyapunov_value(sol.P, state);
        sol.V_target = lyapunov_value(sol.P, target);
        sol.residual = std::abs(gamma - theta_(sol.V - sol.V_target));
        sol.theta_prime = theta_.derivative(sol.V - sol.V_target);
        return sol;
    }

private:
    template <class State>
    GammaSolution bisect(const State& state, const State& target, double tol, int used) const {
        double lo = 0.0, hi = theta_.gamma_max;  // F(lo) <= 0 <= F(hi)
        GammaSolution best = evaluate(state, target, lo);
        if (best.residual <= tol) return best;
        int it = used;
        while (hi - lo > 1e-15 && it < kGammaIterationCap) {
            ++it;
            const double mid = 0.5 * (lo + hi);
            GammaSolution s = evaluate(state, target, mid);
            s.iterations = it;
            if (s.residual <= tol) return s;
            if (mid - theta_(s.V - s.V_target) < 0.0) lo = mid; else hi = mid;
            best = s;
        }
        if (best.residual <= tol) return best;
        throw NumericError("solve_gamma: bisection fallback did not reach tolerance (residual " +
                           std::to_string(best.residual) + ")");
    }

    ControlSystem sys_;
    SpectrumSpec spectrum_;
    ThetaSpec theta_;
    EigenFrame reference_;
};

// Free-function forms of the model operations.

inline ThetaValidation validate_theta(const ThetaSpec& theta, const ControlSystem& sys,
                                      const SpectrumSpec& spectrum, const std::vector<double>& grid) {
    return LyapunovModel(sys, spectrum, theta).validate_theta(grid);
}

inline HermitianOperator dP_dgamma(const ControlSystem& sys, double gamma,
                                   const SpectrumSpec& spectrum, double h = kDerivativeStep) {
    return LyapunovModel(sys, spectrum, ThetaSpec{}).dP_dgamma_bounded(
        gamma, h, std::numeric_limits<double>::infinity());
}

template <class State>
GammaSolution solve_gamma(const ControlSystem& sys, const State& state, const State& target,
                          const ThetaSpec& theta, const SpectrumSpec& spectrum,
                          double warm_start = 0.0) {
    return LyapunovModel(sys, spectrum, theta).solve_gamma(state, target, warm_start);
}

/// Uniform grid of `count` points on (0, γ*].
inline std::vector<double> gamma_grid(double gamma_max, std::size_t count = 100) {
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i)
        g[i] = gamma_max * static_cast<double>(i + 1) / static_cast<double>(count);
    return g;
}

}  // namespace ilc
