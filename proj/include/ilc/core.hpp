// core.hpp: Hermitian linear algebra, state types, propagators.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ilc {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Raised when an iterative routine fails or a numeric invariant breaks.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Complex Hermitian matrix. Construction checks ‖A − A†‖_max ≤ 1e-12 and
/// stores the exactly symmetrized matrix.
class HermitianOperator {
public:
    static constexpr double kTolerance = 1e-12;

    HermitianOperator() = default;

    explicit HermitianOperator(const ComplexMatrix& m) {
        if (m.rows() != m.cols() || m.rows() == 0)
            throw std::invalid_argument("HermitianOperator: matrix must be square and non-empty");
        if (!m.allFinite())
            throw std::invalid_argument("HermitianOperator: non-finite entry");
        const double asym = max_abs(m - m.adjoint());
        if (asym > kTolerance)
            throw std::invalid_argument("HermitianOperator: not Hermitian (|A - A^H|_max = " +
                                        std::to_string(asym) + ")");
        m_ = 0.5 * (m + m.adjoint());
    }

    static HermitianOperator zero(std::size_t n) {
        return HermitianOperator(ComplexMatrix::Zero(static_cast<Eigen::Index>(n),
                                                     static_cast<Eigen::Index>(n)));
    }
    static HermitianOperator identity(std::size_t n) {
        return HermitianOperator(ComplexMatrix::Identity(static_cast<Eigen::Index>(n),
                                                         static_cast<Eigen::Index>(n)));
    }
    static HermitianOperator diagonal(const std::vector<double>& d) {
        ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(d.size()),
                                              static_cast<Eigen::Index>(d.size()));
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return HermitianOperator(m);
    }

    const ComplexMatrix& matrix() const noexcept { return m_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }

    friend HermitianOperator operator+(const HermitianOperator& a, const HermitianOperator& b) {
        check_same_dim(a, b, "operator+");
        return HermitianOperator(a.m_ + b.m_);
    }
    friend HermitianOperator operator-(const HermitianOperator& a, const HermitianOperator& b) {
        check_same_dim(a, b, "operator-");
        return HermitianOperator(a.m_ - b.m_);
    }
    friend HermitianOperator operator*(double s, const HermitianOperator& a) {
        return HermitianOperator(s * a.m_);
    }

    static void check_same_dim(const HermitianOperator& a, const HermitianOperator& b,
                               const char* where) {
        if (a.dim() != b.dim())
            throw std::invalid_argument(std::string(where) + ": dimension mismatch");
    }

private:
    ComplexMatrix m_;
};

/// Normalized state vector; ‖ψ‖₂ = 1 within 1e-10.
class PureState {
public:
    static constexpr double kNormTolerance = 1e-10;

    PureState() = default;

    explicit PureState(const ComplexVector& v) : v_(v) {
        if (v.size() == 0) throw std::invalid_argument("PureState: empty vector");
        if (!v.allFinite()) throw std::invalid_argument("PureState: non-finite amplitude");
        const double n = v.norm();
        if (std::abs(n - 1.0) > kNormTolerance)
            throw std::invalid_argument("PureState: not normalized (norm = " + std::to_string(n) +
                                        ")");
    }

    /// Normalizes any nonzero vector.
    static PureState normalized(const ComplexVector& v) {
        const double n = v.norm();
        if (!(n > 0.0)) throw std::invalid_argument("PureState: zero vector");
        return PureState(v / n);
    }

    static PureState basis(std::size_t n, std::size_t index) {
        if (index >= n) throw std::out_of_range("PureState::basis: index out of range");
        ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(n));
        v(static_cast<Eigen::Index>(index)) = 1.0;
        return PureState(v);
    }

    const ComplexVector& amplitudes() const noexcept { return v_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(v_.size()); }

    RealVector populations() const { return v_.cwiseAbs2(); }

private:
    ComplexVector v_;
};

inline RealVector hermitian_eigenvalues(const HermitianOperator& a);

/// Density operator: Hermitian (1e-12), unit trace (1e-10), eigenvalues ≥ −1e-10.
class DensityMatrix {
public:
    static constexpr double kTraceTolerance = 1e-10;
    static constexpr double kPositivityTolerance = 1e-10;

    DensityMatrix() = default;

    explicit DensityMatrix(const ComplexMatrix& m) : rho_(m) {
        const double tr_err = std::abs(rho_.matrix().trace() - Complex(1.0, 0.0));
        if (tr_err > kTraceTolerance)
            throw std::invalid_argument("DensityMatrix: trace differs from 1 by " +
                                        std::to_string(tr_err));
        const RealVector ev = hermitian_eigenvalues(rho_);
        if (ev.minCoeff() < -kPositivityTolerance)
            throw std::invalid_argument("DensityMatrix: negative eigenvalue " +
                                        std::to_string(ev.minCoeff()));
    }

    static DensityMatrix from_pure(const PureState& psi) {
        const ComplexVector& v = psi.amplitudes();
        return DensityMatrix(v * v.adjoint());
    }

    static DensityMatrix diagonal(const std::vector<double>& p) {
        ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(p.size()),
                                              static_cast<Eigen::Index>(p.size()));
        for (std::size_t i = 0; i < p.size(); ++i) m(i, i) = p[i];
        return DensityMatrix(m);
    }

    /// Skips the spectral check; used by unitary propagation, which preserves it.
    static DensityMatrix unchecked(const ComplexMatrix& m) {
        DensityMatrix d;
        d.rho_ = HermitianOperator(0.5 * (m + m.adjoint()));
        return d;
    }

    const ComplexMatrix& matrix() const noexcept { return rho_.matrix(); }
    const HermitianOperator& op() const noexcept { return rho_; }
    std::size_t dim() const noexcept { return rho_.dim(); }

    RealVector populations() const { return rho_.matrix().diagonal().real(); }

private:
    HermitianOperator rho_;
};

// ---------------------------------------------------------------------------
// Eigendecomposition
// ---------------------------------------------------------------------------

struct EigenDecomposition {
    RealVector eigenvalues;            ///< ascending
    ComplexMatrix eigenvectors;        ///< column j pairs with eigenvalue j
    std::vector<std::size_t> cluster;  ///< cluster id per eigenvalue (equal within 1e-9)

    std::size_t dim() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
    bool has_degeneracy() const noexcept {
        return !cluster.empty() && cluster.back() + 1 < cluster.size();
    }
    ComplexVector vector(std::size_t j) const {
        return eigenvectors.col(static_cast<Eigen::Index>(j));
    }
};

namespace detail {

inline constexpr int kMaxJacobiSweeps = 100;
inline constexpr double kClusterTolerance = 1e-9;

// Index of the largest-magnitude entry; ties go to the lowest index.
inline Eigen::Index dominant_index(const ComplexVector& v) {
    Eigen::Index best = 0;
    double best_mag = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v(i));
        if (mag > best_mag * (1.0 + 1e-12) + 1e-300) {
            best = i;
            best_mag = mag;
        }
    }
    return best;
}

inline double off_diagonal_norm2(const ComplexMatrix& a) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (i != j) s += std::norm(a(i, j));
    return s;
}

// Cyclic complex Jacobi. On return `a` is diagonal and `v` holds the eigenvectors.
inline void jacobi_diagonalize(ComplexMatrix& a, ComplexMatrix& v) {
    const Eigen::Index n = a.rows();
    v = ComplexMatrix::Identity(n, n);
    const double scale = std::max(a.norm(), 1e-300);
    const double target = std::pow(std::numeric_limits<double>::epsilon() * scale, 2);
    for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
        if (off_diagonal_norm2(a) <= target) return;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double r = std::abs(a(p, q));
                if (r <= 1e-300) continue;
                const Complex phase = a(p, q) / r;  // e^{i phi}
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * r);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // W = diag(1, conj(phase)) * [[c, s], [-s, c]] on the (p, q) plane.
                const Complex wpp = c;
                const Complex wpq = s;
                const Complex wqp = -s * std::conj(phase);
                const Complex wqq = c * std::conj(phase);
                for (Eigen::Index k = 0; k < n; ++k) {  // a <- a W
                    const Complex akp = a(k, p);
                    const Complex akq = a(k, q);
                    a(k, p) = akp * wpp + akq * wqp;
                    a(k, q) = akp * wpq + akq * wqq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {  // a <- W^H a
                    const Complex apk = a(p, k);
                    const Complex aqk = a(q, k);
                    a(p, k) = std::conj(wpp) * apk + std::conj(wqp) * aqk;
                    a(q, k) = std::conj(wpq) * apk + std::conj(wqq) * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
                for (Eigen::Index k = 0; k < n; ++k) {  // v <- v W
                    const Complex vkp = v(k, p);
                    const Complex vkq = v(k, q);
                    v(k, p) = vkp * wpp + vkq * wqp;
                    v(k, q) = vkp * wpq + vkq * wqq;
                }
            }
        }
    }
    if (off_diagonal_norm2(a) > target * 1e4)
        throw NumericError("eig_hermitian: Jacobi iteration did not converge after " +
                           std::to_string(kMaxJacobiSweeps) + " sweeps (off-diagonal norm " +
                           std::to_string(std::sqrt(off_diagonal_norm2(a))) + ")");
}

}  // namespace detail

/// Eigendecomposition of a Hermitian operator with deterministic ordering:
/// ascending eigenvalues, degenerate clusters (1e-9) ordered by the index of the
/// dominant component, each column's dominant component real and positive.
inline EigenDecomposition eig_hermitian(const HermitianOperator& op) {
    const Eigen::Index n = static_cast<Eigen::Index>(op.dim());
    ComplexMatrix a = op.matrix();
    ComplexMatrix v;
    detail::jacobi_diagonalize(a, v);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
        return a(x, x).real() < a(y, y).real();
    });

    // Phase convention first, so the dominant index is well defined.
    for (Eigen::Index j = 0; j < n; ++j) {
        ComplexVector col = v.col(j);
        const Eigen::Index d = detail::dominant_index(col);
        const double mag = std::abs(col(d));
        if (mag > 0.0) col *= std::conj(col(d)) / mag;
        col(d) = std::abs(col(d));
        v.col(j) = col;
    }

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    out.cluster.assign(static_cast<std::size_t>(n), 0);

    std::size_t start = 0;
    std::size_t cluster_id = 0;
    const auto un = static_cast<std::size_t>(n);
    while (start < un) {
        std::size_t end = start + 1;
        while (end < un && a(order[end], order[end]).real() - a(order[end - 1], order[end - 1]).real() <=
                               detail::kClusterTolerance)
            ++end;
        std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](Eigen::Index x, Eigen::Index y) {
                             return detail::dominant_index(v.col(x)) < detail::dominant_index(v.col(y));
                         });
        for (std::size_t k = start; k < end; ++k) out.cluster[k] = cluster_id;
        ++cluster_id;
        start = end;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index src = order[static_cast<std::size_t>(j)];
        out.eigenvalues(j) = a(src, src).real();
        out.eigenvectors.col(j) = v.col(src);
    }
    return out;
}

inline RealVector hermitian_eigenvalues(const HermitianOperator& a) {
    return eig_hermitian(a).eigenvalues;
}

// ---------------------------------------------------------------------------
// Commutators, expectations, fidelity
// ---------------------------------------------------------------------------

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("commutator: dimension mismatch");
    return a * b - b * a;
}

inline ComplexMatrix commutator(const HermitianOperator& a, const HermitianOperator& b) {
    return commutator(a.matrix(), b.matrix());
}

namespace detail {
inline constexpr double kImagDiscard = 1e-12;
inline constexpr double kImagReject = 1e-10;

inline double real_part_checked(Complex z, double scale, const char* where) {
    if (std::abs(z.imag()) > kImagReject * std::max(1.0, scale))
        throw NumericError(std::string(where) + ": imaginary residue " + std::to_string(z.imag()) +
                           " (non-Hermitian argument?)");
    return z.real();
}
}  // namespace detail

/// ⟨ψ|A|ψ⟩ for an arbitrary square matrix; returns the complex value.
inline Complex expectation_complex(const ComplexMatrix& a, const PureState& s) {
    if (static_cast<std::size_t>(a.rows()) != s.dim())
        throw std::invalid_argument("expectation: dimension mismatch");
    return s.amplitudes().dot(a * s.amplitudes());  // dot conjugates the first argument
}

/// tr(Aρ) for an arbitrary square matrix.
inline Complex expectation_complex(const ComplexMatrix& a, const DensityMatrix& rho) {
    if (static_cast<std::size_t>(a.rows()) != rho.dim())
        throw std::invalid_argument("expectation: dimension mismatch");
    return (a * rho.matrix()).trace();
}

template <class State>
double expectation(const HermitianOperator& a, const State& s) {
    const Complex z = expectation_complex(a.matrix(), s);
    return detail::real_part_checked(z, max_abs(a.matrix()), "expectation");
}

/// |⟨ψ_f|ψ⟩|² for pure states, tr(ρ_f ρ) for density matrices.
inline double fidelity(const PureState& state, const PureState& target) {
    if (state.dim() != target.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
    return std::norm(target.amplitudes().dot(state.amplitudes()));
}

inline double fidelity(const DensityMatrix& state, const DensityMatrix& target) {
    if (state.dim() != target.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
    return (target.matrix() * state.matrix()).trace().real();
}

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

/// exp(−i H dt) from the eigendecomposition of H.
inline ComplexMatrix unitary_propagator(const HermitianOperator& h, double dt) {
    const EigenDecomposition e = eig_hermitian(h);
    ComplexVector phases(e.eigenvalues.size());
    for (Eigen::Index j = 0; j < phases.size(); ++j)
        phases(j) = std::exp(-kI * (e.eigenvalues(j) * dt));
    return e.eigenvectors * phases.asDiagonal() * e.eigenvectors.adjoint();
}

inline PureState apply_unitary(const ComplexMatrix& u, const PureState& s) {
    return PureState(u * s.amplitudes());
}

inline DensityMatrix apply_unitary(const ComplexMatrix& u, const DensityMatrix& rho) {
    return DensityMatrix::unchecked(u * rho.matrix() * u.adjoint());
}

template <class State>
State propagate_step(const HermitianOperator& h_total, double dt, const State& s) {
    if (!(dt > 0.0)) throw std::invalid_argument("propagate_step: dt must be positive");
    if (h_total.dim() != s.dim()) throw std::invalid_argument("propagate_step: dimension mismatch");
    return apply_unitary(unitary_propagator(h_total, dt), s);
}

}  // namespace ilc
