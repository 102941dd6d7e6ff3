#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace ilc;
using ilc::testing::random_hermitian;

namespace {

// Closed-form roots of the characteristic polynomial of a 3x3 Hermitian matrix
// (trigonometric form), ascending.
std::array<double, 3> cubic_roots(const ComplexMatrix& a) {
    const double q = a.trace().real() / 3.0;
    const ComplexMatrix s = a - q * ComplexMatrix::Identity(3, 3);
    const double p = std::sqrt((s * s).trace().real() / 6.0);
    if (p == 0.0) return {q, q, q};
    const double r = std::clamp((s / p).determinant().real() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    std::array<double, 3> out{e3, 3.0 * q - e1 - e3, e1};
    std::sort(out.begin(), out.end());
    return out;
}

ComplexMatrix pauli(char which) {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    switch (which) {
        case 'x': m(0, 1) = m(1, 0) = 1.0; break;
        case 'y': m(0, 1) = Complex(0, -1); m(1, 0) = Complex(0, 1); break;
        case 'z': m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    }
    return m;
}

}  // namespace

TEST(HermitianOperator, RejectsNonHermitianBeyondTolerance) {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 1) = 1.0;
    m(1, 0) = 1.0 + 1e-9;
    EXPECT_THROW(HermitianOperator{m}, std::invalid_argument);
    m(1, 0) = 1.0 + 1e-13;
    const HermitianOperator h(m);
    EXPECT_EQ(h.matrix(), h.matrix().adjoint());
}

TEST(HermitianOperator, RejectsNonSquareAndNonFinite) {
    EXPECT_THROW(HermitianOperator{ComplexMatrix::Zero(2, 3)}, std::invalid_argument);
    ComplexMatrix m = ComplexMatrix::Identity(2, 2);
    m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(HermitianOperator{m}, std::invalid_argument);
}

TEST(PureState, NormToleranceAndBasis) {
    ComplexVector v(2);
    v << 1.0, 1e-4;
    EXPECT_THROW(PureState{v}, std::invalid_argument);
    EXPECT_NEAR(PureState::normalized(v).amplitudes().norm(), 1.0, 1e-15);
    EXPECT_THROW(PureState::normalized(ComplexVector::Zero(3)), std::invalid_argument);
    EXPECT_THROW(PureState::basis(3, 3), std::out_of_range);
    EXPECT_EQ(PureState::basis(3, 2).populations()(2), 1.0);
}

TEST(DensityMatrix, TraceAndPositivity) {
    EXPECT_THROW(DensityMatrix::diagonal({0.5, 0.6}), std::invalid_argument);
    EXPECT_THROW(DensityMatrix::diagonal({1.1, -0.1}), std::invalid_argument);
    const DensityMatrix rho = DensityMatrix::diagonal({2.0 / 3, 1.0 / 3, 0.0});
    EXPECT_NEAR(rho.populations().sum(), 1.0, 1e-15);
    const DensityMatrix pure = DensityMatrix::from_pure(PureState::basis(2, 1));
    EXPECT_EQ(pure.matrix()(1, 1), Complex(1.0, 0.0));
}

TEST(EigHermitian, MatchesCharacteristicPolynomialRoots) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const ComplexMatrix a = random_hermitian(rng, 3);
        const EigenDecomposition e = eig_hermitian(HermitianOperator(a));
        const auto roots = cubic_roots(a);
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(e.eigenvalues(j), roots[static_cast<std::size_t>(j)], 1e-11);
    }
}

TEST(EigHermitian, MatchesEigenSelfAdjointSolver) {
    std::mt19937_64 rng(12);
    for (std::size_t n = 1; n <= 8; ++n) {
        for (int trial = 0; trial < 20; ++trial) {
            const ComplexMatrix a = random_hermitian(rng, n);
            const EigenDecomposition e = eig_hermitian(HermitianOperator(a));
            Eigen::SelfAdjointEigenSolver<ComplexMatrix> ref(a);
            EXPECT_LE((e.eigenvalues - ref.eigenvalues()).cwiseAbs().maxCoeff(), 1e-11);
            const ComplexMatrix& v = e.eigenvectors;
            EXPECT_LE(max_abs(v.adjoint() * v - ComplexMatrix::Identity(a.rows(), a.cols())), 1e-12);
            EXPECT_LE(max_abs(a * v - v * e.eigenvalues.cast<Complex>().asDiagonal()), 1e-11);
        }
    }
}

TEST(EigHermitian, DressedThreeLevelDriftHasExactSpectrum) {
    // The 1-2 block [[0.3, η], [η, 0.5]] with η = 0.2√2 has eigenvalues 0.4 ± 0.3.
    const HermitianOperator d = dressed_drift(ilc::testing::three_level(ilc::testing::kEta1), 0.0);
    const RealVector ev = hermitian_eigenvalues(d);
    EXPECT_NEAR(ev(0), 0.1, 1e-14);
    EXPECT_NEAR(ev(1), 0.7, 1e-14);
    EXPECT_NEAR(ev(2), 0.9, 1e-14);
}

TEST(EigHermitian, DeterministicConventionOnDegenerateClusters) {
    const EigenDecomposition e = eig_hermitian(HermitianOperator::diagonal({0.5, 0.2, 0.5, 0.2}));
    EXPECT_TRUE(e.has_degeneracy());
    EXPECT_EQ(e.cluster, (std::vector<std::size_t>{0, 0, 1, 1}));
    // Within a cluster, columns are ordered by the index of their dominant component.
    EXPECT_EQ(detail::dominant_index(e.vector(0)), 1);
    EXPECT_EQ(detail::dominant_index(e.vector(1)), 3);
    EXPECT_EQ(detail::dominant_index(e.vector(2)), 0);
    EXPECT_EQ(detail::dominant_index(e.vector(3)), 2);
}

TEST(EigHermitian, DominantComponentIsRealPositive) {
    std::mt19937_64 rng(13);
    const EigenDecomposition e = eig_hermitian(HermitianOperator(random_hermitian(rng, 5)));
    for (std::size_t j = 0; j < 5; ++j) {
        const ComplexVector v = e.vector(j);
        const Complex d = v(detail::dominant_index(v));
        EXPECT_GT(d.real(), 0.0);
        EXPECT_EQ(d.imag(), 0.0);
    }
}

TEST(Commutator, PauliAlgebra) {
    // [σx, σz] = −2iσy
    const ComplexMatrix c = commutator(pauli('x'), pauli('z'));
    EXPECT_LE(max_abs(c - Complex(0, -2) * pauli('y')), 1e-15);
    EXPECT_THROW(commutator(ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(3, 3)), std::invalid_argument);
}

TEST(Expectation, RealForHermitianAndRejectsImaginaryResidue) {
    const PureState s = PureState::normalized((ComplexVector(2) << 1.0, Complex(0, 1)).finished());
    EXPECT_NEAR(expectation(HermitianOperator(pauli('y')), s), 1.0, 1e-15);
    EXPECT_NEAR(expectation(HermitianOperator(pauli('x')), DensityMatrix::from_pure(s)), 0.0, 1e-15);
    const Complex z = expectation_complex(Complex(0, 1) * pauli('z'), PureState::basis(2, 0));
    EXPECT_NEAR(z.imag(), 1.0, 1e-15);
}

TEST(Fidelity, PureAndDensity) {
    const PureState a = PureState::basis(2, 0);
    const PureState b = PureState::normalized((ComplexVector(2) << 1.0, 1.0).finished());
    EXPECT_NEAR(fidelity(a, b), 0.5, 1e-15);
    EXPECT_NEAR(fidelity(DensityMatrix::from_pure(a), DensityMatrix::from_pure(b)), 0.5, 1e-15);
    EXPECT_THROW(fidelity(a, PureState::basis(3, 0)), std::invalid_argument);
}

TEST(Propagation, RabiOscillationClosedForm) {
    // H = Ω σx: populations cos²(Ωt), sin²(Ωt).
    const double omega = 0.7, t = 1.3;
    const PureState s = propagate_step(HermitianOperator(omega * pauli('x')), t, PureState::basis(2, 0));
    EXPECT_NEAR(s.populations()(0), std::pow(std::cos(omega * t), 2), 1e-14);
    EXPECT_NEAR(s.populations()(1), std::pow(std::sin(omega * t), 2), 1e-14);
    EXPECT_THROW(propagate_step(HermitianOperator(pauli('x')), 0.0, s), std::invalid_argument);
}

TEST(Propagation, PropagatorIsUnitaryAndMatchesSeries) {
    std::mt19937_64 rng(14);
    const ComplexMatrix h = random_hermitian(rng, 4);
    const double dt = 1e-3;
    const ComplexMatrix u = unitary_propagator(HermitianOperator(h), dt);
    EXPECT_LE(max_abs(u.adjoint() * u - ComplexMatrix::Identity(4, 4)), 1e-14);
    ComplexMatrix series = ComplexMatrix::Identity(4, 4), term = ComplexMatrix::Identity(4, 4);
    for (int k = 1; k < 8; ++k) {
        term = term * (-kI * dt * h) / static_cast<double>(k);
        series += term;
    }
    EXPECT_LE(max_abs(u - series), 1e-14);
}

TEST(Propagation, DensityStepEqualsPureStepOuterProduct) {
    std::mt19937_64 rng(15);
    const HermitianOperator h(random_hermitian(rng, 3));
    const PureState psi = ilc::testing::random_state(rng, 3);
    const PureState p1 = propagate_step(h, 0.37, psi);
    const DensityMatrix r1 = propagate_step(h, 0.37, DensityMatrix::from_pure(psi));
    EXPECT_LE(max_abs(r1.matrix() - p1.amplitudes() * p1.amplitudes().adjoint()), 1e-14);
}
