// model_design.hpp: degeneracy detection, constant-disturbance design, P-spectrum design.

#pragma once

#include "ilc/system.hpp"

#include <set>
#include <utility>

namespace ilc {

inline constexpr double kDegeneracyTolerance = 1e-9;

using LevelPair = std::pair<std::size_t, std::size_t>;  // 0-based, first < second

struct TransitionFrequency {
    std::size_t l = 0, m = 0;  // 0-based
    double omega = 0.0;        // λ_l − λ_m
};

struct StrongRegularity {
    bool regular = true;
    std::vector<TransitionFrequency> frequencies;  ///< every ordered pair l != m
    std::vector<std::pair<TransitionFrequency, TransitionFrequency>> collisions;
};

/// Transition frequencies of an ascending spectrum over ordered pairs l != m.
inline std::vector<TransitionFrequency> transition_frequencies(const RealVector& lambda) {
    std::vector<TransitionFrequency> out;
    const auto n = static_cast<std::size_t>(lambda.size());
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t m = 0; m < n; ++m)
            if (l != m)
                out.push_back({l, m, lambda(static_cast<Eigen::Index>(l)) -
                                         lambda(static_cast<Eigen::Index>(m))});
    return out;
}

inline StrongRegularity strong_regularity_of(const RealVector& lambda, double tol) {
    StrongRegularity r;
    r.frequencies = transition_frequencies(lambda);
    for (std::size_t a = 0; a < r.frequencies.size(); ++a)
        for (std::size_t b = a + 1; b < r.frequencies.size(); ++b)
            if (std::abs(r.frequencies[a].omega - r.frequencies[b].omega) <= tol)
                r.collisions.emplace_back(r.frequencies[a], r.frequencies[b]);
    r.regular = r.collisions.empty();
    return r;
}

/// True iff all ω_lm = λ_l − λ_m (l != m) are pairwise distinct beyond tol.
inline StrongRegularity check_strong_regularity(const HermitianOperator& h, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("check_strong_regularity: tol must be positive");
    return strong_regularity_of(eig_hermitian(h).eigenvalues, tol);
}

struct DegeneracyReport {
    double gamma = 0.0;
    bool strongly_regular = true;
    bool fully_connected = true;
    bool ill_conditioned = false;  ///< dressed drift has clustered eigenvalues
    std::vector<LevelPair> connected_pairs;
    std::vector<LevelPair> missing_pairs;
    std::vector<TransitionFrequency> transition_frequencies;
    Eigen::MatrixXd coupling;  ///< max_k |(Ĥ_k)_{lm}| in the dressed eigenbasis
};

inline DegeneracyReport connectivity_in_frame(const ControlSystem& sys, const EigenFrame& frame,
                                              double tol) {
    DegeneracyReport rep;
    rep.gamma = frame.gamma;
    rep.ill_conditioned = frame.degenerate;
    const std::size_t n = sys.dim();
    rep.coupling = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const auto& c : sys.channels())
        rep.coupling = rep.coupling.cwiseMax(frame.transform(c.H.matrix()).cwiseAbs());
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t m = l + 1; m < n; ++m) {
            if (rep.coupling(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(m)) > tol)
                rep.connected_pairs.emplace_back(l, m);
            else
                rep.missing_pairs.emplace_back(l, m);
        }
    rep.fully_connected = rep.missing_pairs.empty();
    // Regularity needs the ascending spectrum; frame order may be tracked.
    RealVector sorted = frame.eigenvalues;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    const StrongRegularity sr = strong_regularity_of(sorted, tol);
    rep.strongly_regular = sr.regular;
    rep.transition_frequencies = sr.frequencies;
    return rep;
}

/// Couplings of every H_k in the eigenbasis of the dressed drift at `gamma`
/// (ascending levels).
inline DegeneracyReport check_full_connectedness(const ControlSystem& sys, double gamma,
                                                 double tol = kDegeneracyTolerance) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("check_full_connectedness: gamma must be >= 0");
    return connectivity_in_frame(sys, build_frame(sys, gamma), tol);
}

// ---------------------------------------------------------------------------
// Constant disturbances
// ---------------------------------------------------------------------------

struct EtaDesign {
    std::vector<double> eta;
    double residual = 0.0;
};

class UnreachableTargetError : public NumericError {
public:
    explicit UnreachableTargetError(double residual)
        : NumericError("target not reachable as dressed eigenstate with available channels "
                       "(residual " + std::to_string(residual) + ")"),
          residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

namespace detail {

inline Eigen::VectorXd stack_real_imag(const ComplexMatrix& m) {
    const Eigen::Index n = m.size();
    Eigen::VectorXd out(2 * n);
    const ComplexVector flat = m.reshaped();
    out.head(n) = flat.real();
    out.tail(n) = flat.imag();
    return out;
}

// Solves min_η ‖a0 + Σ η_k a_k‖ for complex a's; returns η and the residual norm.
inline EtaDesign affine_least_squares(const ComplexMatrix& a0, const std::vector<ComplexMatrix>& ak) {
    const Eigen::VectorXd b = -stack_real_imag(a0);
    Eigen::MatrixXd A(b.size(), static_cast<Eigen::Index>(ak.size()));
    for (std::size_t k = 0; k < ak.size(); ++k)
        A.col(static_cast<Eigen::Index>(k)) = stack_real_imag(ak[k]);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    cod.setThreshold(1e-12);
    const Eigen::VectorXd x = cod.solve(b);
    EtaDesign d;
    d.eta.assign(x.data(), x.data() + x.size());
    d.residual = (A * x - b).norm();
    return d;
}

}  // namespace detail

/// Least-squares η making ψ_f an eigenvector of H0 + Σ η_k H_k: minimizes
/// ‖(I − |ψ_f⟩⟨ψ_f|)(H0 + Σ η_k H_k)|ψ_f⟩‖. Throws UnreachableTargetError if the
/// minimum residual is not below tol.
inline EtaDesign design_eta(const ControlSystem& sys, const PureState& target, double tol = 1e-10) {
    if (target.dim() != sys.dim()) throw std::invalid_argument("design_eta: dimension mismatch");
    const ComplexVector& psi = target.amplitudes();
    const ComplexMatrix proj =
        ComplexMatrix::Identity(psi.size(), psi.size()) - psi * psi.adjoint();
    const ComplexMatrix a0 = proj * sys.H0().matrix() * psi;
    std::vector<ComplexMatrix> ak;
    for (const auto& c : sys.channels()) ak.push_back(proj * c.H.matrix() * psi);
    EtaDesign d = detail::affine_least_squares(a0, ak);
    if (!(d.residual < tol)) throw UnreachableTargetError(d.residual);
    return d;
}

/// Least-squares η minimizing ‖[H0 + Σ η_k H_k, ρ_f]‖_F.
inline EtaDesign design_eta(const ControlSystem& sys, const DensityMatrix& target,
                            double tol = 1e-10) {
    if (target.dim() != sys.dim()) throw std::invalid_argument("design_eta: dimension mismatch");
    const ComplexMatrix a0 = commutator(sys.H0().matrix(), target.matrix());
    std::vector<ComplexMatrix> ak;
    for (const auto& c : sys.channels()) ak.push_back(commutator(c.H.matrix(), target.matrix()));
    EtaDesign d = detail::affine_least_squares(a0, ak);
    if (!(d.residual < tol)) throw UnreachableTargetError(d.residual);
    return d;
}

// ---------------------------------------------------------------------------
// Spectrum of the mechanical quantity
// ---------------------------------------------------------------------------

/// 0.1, 0.4, 0.7, ... (spacing 0.3).
inline std::vector<double> default_ladder(std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = 0.1 + 0.3 * static_cast<double>(j);
    return out;
}

/// Frame direction with the largest overlap with ψ.
inline std::size_t target_direction(const EigenFrame& frame, const PureState& psi) {
    Eigen::Index best = 0;
    (frame.basis.adjoint() * psi.amplitudes()).cwiseAbs2().maxCoeff(&best);
    return static_cast<std::size_t>(best);
}

/// values[f] = target_value; other_values go, in order, to the remaining directions.
inline SpectrumSpec spectrum_from_values(std::size_t target_index, double target_value,
                                         const std::vector<double>& other_values) {
    const std::size_t n = other_values.size() + 1;
    if (target_index >= n) throw std::out_of_range("spectrum_from_values: target index out of range");
    std::vector<double> v(n);
    std::size_t next = 0;
    for (std::size_t j = 0; j < n; ++j) v[j] = (j == target_index) ? target_value : other_values[next++];
    return SpectrumSpec(std::move(v));
}

/// Target direction gets the smallest value. With no ladder, P_f = 0.1 and the
/// other directions receive 0.4, 0.7, ... in ascending direction order.
inline SpectrumSpec design_spectrum_pure(std::size_t target_index, std::size_t n,
                                         std::vector<double> ladder = {}) {
    if (n == 0 || target_index >= n)
        throw std::out_of_range("design_spectrum_pure: need 0 <= target index < N");
    if (ladder.empty()) ladder = default_ladder(n);
    if (ladder.size() != n) throw std::invalid_argument("design_spectrum_pure: ladder size != N");
    std::sort(ladder.begin(), ladder.end());
    return spectrum_from_values(target_index, ladder.front(),
                                std::vector<double>(ladder.begin() + 1, ladder.end()));
}

/// Populations of ρ_f in `frame`; throws when ρ̃_f is not diagonal within 1e-8.
inline RealVector frame_populations(const DensityMatrix& target, const EigenFrame& frame,
                                    double tol = 1e-8) {
    if (target.dim() != frame.dim()) throw std::invalid_argument("frame_populations: dimension mismatch");
    ComplexMatrix t = frame.transform(target.matrix());
    const RealVector diag = t.diagonal().real();
    t.diagonal().setZero();
    if (max_abs(t) > tol)
        throw NumericError("target is not diagonal in the dressed eigenbasis (off-diagonal " +
                           std::to_string(max_abs(t)) + "); run design_eta first");
    return diag;
}

/// P ordered inversely to the target's populations in `frame` (largest population
/// gets the smallest value; equal populations are split by index).
inline SpectrumSpec design_spectrum_density(const DensityMatrix& target, const EigenFrame& frame,
                                            std::vector<double> ladder = {}) {
    const RealVector pop = frame_populations(target, frame);
    const std::size_t n = static_cast<std::size_t>(pop.size());
    if (ladder.empty()) ladder = default_ladder(n);
    if (ladder.size() != n) throw std::invalid_argument("design_spectrum_density: ladder size != N");
    std::sort(ladder.begin(), ladder.end());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pop(static_cast<Eigen::Index>(a)) > pop(static_cast<Eigen::Index>(b));
    });
    std::vector<double> v(n);
    for (std::size_t rank = 0; rank < n; ++rank) v[order[rank]] = ladder[rank];
    return SpectrumSpec(std::move(v));
}

}  // namespace ilc
