#pragma once

#include "ilc/simulator.hpp"

#include <random>

namespace ilc::testing {

inline ComplexMatrix random_hermitian(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    ComplexMatrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = Complex(g(rng), g(rng));
    return 0.5 * (a + a.adjoint());
}

inline PureState random_state(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g(0.0, 1.0);
    ComplexVector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(g(rng), g(rng));
    return PureState::normalized(v);
}

inline ComplexMatrix coupling(std::size_t n, std::size_t a, std::size_t b) {
    ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 1.0;
    m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = 1.0;
    return m;
}

/// Three-level degenerate example: H0 = diag(0.3, 0.5, 0.9), H1 couples 1-2, H2 couples 1-3.
inline ControlSystem three_level(double eta1 = 0.0, double eta2 = 0.0) {
    return ControlSystem(HermitianOperator::diagonal({0.3, 0.5, 0.9}),
                         {{HermitianOperator(coupling(3, 0, 1)), 0.2, eta1, true},
                          {HermitianOperator(coupling(3, 0, 2)), 0.2, eta2, true}});
}

inline PureState three_level_target() {
    ComplexVector f(3);
    f << std::sqrt(2.0 / 3.0), -std::sqrt(1.0 / 3.0), 0.0;
    return PureState(f);
}

inline const double kEta1 = 0.2 * std::sqrt(2.0);

/// Designed three-level model with spectrum 0.1 on the target direction and 0.4, 0.6 elsewhere.
inline LyapunovModel three_level_model() {
    const ControlSystem sys = three_level(kEta1, 0.0);
    const std::size_t f = target_direction(reference_frame(sys), three_level_target());
    return LyapunovModel(sys, spectrum_from_values(f, 0.1, {0.4, 0.6}), ThetaSpec(0.01, 0.1));
}

}  // namespace ilc::testing
