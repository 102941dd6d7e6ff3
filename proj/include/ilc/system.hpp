// system.hpp: control-system description, dressed drift, continuity-tracked eigenframes.

#pragma once

#include "ilc/core.hpp"

#include <optional>
#include <sstream>

namespace ilc {

/// One control Hamiltonian with its gain, constant disturbance and γ flag.
struct ControlChannel {
    HermitianOperator H;
    double K = 1.0;
    double eta = 0.0;
    bool gamma_channel = false;
};

/// Drift plus r control channels, all of the same dimension.
class ControlSystem {
public:
    ControlSystem() = default;

    ControlSystem(HermitianOperator h0, std::vector<ControlChannel> channels)
        : h0_(std::move(h0)), channels_(std::move(channels)) {
        if (channels_.empty())
            throw std::invalid_argument("ControlSystem: at least one control channel is required");
        bool any_gamma = false;
        for (std::size_t k = 0; k < channels_.size(); ++k) {
            const auto& c = channels_[k];
            if (c.H.dim() != h0_.dim())
                throw std::invalid_argument("ControlSystem: channel " + std::to_string(k + 1) +
                                            " dimension differs from H0");
            if (!(c.K > 0.0))
                throw std::invalid_argument("ControlSystem: channel " + std::to_string(k + 1) +
                                            " gain K must be positive");
            if (!std::isfinite(c.eta))
                throw std::invalid_argument("ControlSystem: non-finite eta");
            any_gamma = any_gamma || c.gamma_channel;
        }
        if (!any_gamma)
            throw std::invalid_argument("ControlSystem: at least one gamma channel is required");
    }

    const HermitianOperator& H0() const noexcept { return h0_; }
    const std::vector<ControlChannel>& channels() const noexcept { return channels_; }
    const ControlChannel& channel(std::size_t k) const { return channels_.at(k); }
    std::size_t dim() const noexcept { return h0_.dim(); }
    std::size_t size() const noexcept { return channels_.size(); }

    std::vector<double> etas() const {
        std::vector<double> out;
        out.reserve(channels_.size());
        for (const auto& c : channels_) out.push_back(c.eta);
        return out;
    }

    /// Copy with the disturbances replaced.
    ControlSystem with_etas(const std::vector<double>& eta) const {
        if (eta.size() != channels_.size())
            throw std::invalid_argument("ControlSystem::with_etas: size mismatch");
        auto ch = channels_;
        for (std::size_t k = 0; k < ch.size(); ++k) ch[k].eta = eta[k];
        return ControlSystem(h0_, std::move(ch));
    }

    /// H0 + Σ u_k H_k.
    HermitianOperator total_hamiltonian(const std::vector<double>& u) const {
        if (u.size() != channels_.size())
            throw std::invalid_argument("total_hamiltonian: control vector size mismatch");
        ComplexMatrix m = h0_.matrix();
        for (std::size_t k = 0; k < u.size(); ++k) m += u[k] * channels_[k].H.matrix();
        return HermitianOperator(m);
    }

private:
    HermitianOperator h0_;
    std::vector<ControlChannel> channels_;
};

/// H0 + Σ η_k H_k + γ Σ_{γ-channels} H_n.
inline HermitianOperator dressed_drift(const ControlSystem& sys, double gamma) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("dressed_drift: gamma must be >= 0");
    ComplexMatrix m = sys.H0().matrix();
    for (const auto& c : sys.channels()) {
        const double coeff = c.eta + (c.gamma_channel ? gamma : 0.0);
        if (coeff != 0.0) m += coeff * c.H.matrix();
    }
    return HermitianOperator(m);
}

/// Distinct positive values; values[j] is bound to reference-frame direction j.
class SpectrumSpec {
public:
    SpectrumSpec() = default;

    explicit SpectrumSpec(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw std::invalid_argument("SpectrumSpec: empty");
        if (auto why = violation(values_)) throw std::invalid_argument("SpectrumSpec: " + *why);
    }

    /// Skips validation; lets condition checks report coincident values.
    static SpectrumSpec unvalidated(std::vector<double> values) {
        SpectrumSpec s;
        s.values_ = std::move(values);
        return s;
    }

    /// Reason the values fail the positivity/distinctness predicate, if any.
    static std::optional<std::string> violation(const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!(v[i] > 0.0) || !std::isfinite(v[i]))
                return "value " + std::to_string(i + 1) + " is not a finite positive number";
            for (std::size_t j = i + 1; j < v.size(); ++j)
                if (std::abs(v[i] - v[j]) <= 1e-12)
                    return "values " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                           " coincide";
        }
        return std::nullopt;
    }

    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t j) const { return values_.at(j); }

private:
    std::vector<double> values_;
};

/// Eigenbasis of the dressed drift at one γ. Columns are ordered to follow the
/// reference frame continuously; eigenvalues(j) belongs to basis column j.
struct EigenFrame {
    double gamma = 0.0;
    RealVector eigenvalues;
    ComplexMatrix basis;
    bool degenerate = false;  ///< eigenvalues clustered within 1e-9

    std::size_t dim() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
    ComplexVector direction(std::size_t j) const {
        return basis.col(static_cast<Eigen::Index>(j));
    }
    /// ω_{l,m} = λ_l − λ_m.
    double frequency(std::size_t l, std::size_t m) const {
        return eigenvalues(static_cast<Eigen::Index>(l)) - eigenvalues(static_cast<Eigen::Index>(m));
    }
    /// U† A U.
    ComplexMatrix transform(const ComplexMatrix& a) const { return basis.adjoint() * a * basis; }
};

/// Frame matching failed: two eigenvectors overlap a reference column almost equally.
class FrameMatchingError : public NumericError {
public:
    FrameMatchingError(double gamma, const std::string& what)
        : NumericError(what), gamma_(gamma) {}
    double gamma() const noexcept { return gamma_; }

private:
    double gamma_;
};

inline constexpr double kMatchAmbiguity = 1e-6;

/// Eigendecomposition of the dressed drift at `gamma`. Without a reference the
/// columns are ascending in eigenvalue; with one, column j is the eigenvector of
/// maximal overlap with reference column j.
inline EigenFrame build_frame(const ControlSystem& sys, double gamma,
                              const EigenFrame* reference = nullptr) {
    const EigenDecomposition e = eig_hermitian(dressed_drift(sys, gamma));
    EigenFrame f;
    f.gamma = gamma;
    f.degenerate = e.has_degeneracy();
    if (reference == nullptr) {
        f.eigenvalues = e.eigenvalues;
        f.basis = e.eigenvectors;
        return f;
    }
    const Eigen::Index n = static_cast<Eigen::Index>(e.dim());
    if (reference->basis.rows() != n)
        throw std::invalid_argument("build_frame: reference dimension mismatch");
    // overlap(i, j) = |<ref_j | phi_i>|^2
    const Eigen::MatrixXd overlap = (e.eigenvectors.adjoint() * reference->basis).cwiseAbs2();
    std::vector<Eigen::Index> pick(static_cast<std::size_t>(n), -1);
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::Index best = 0;
        double first = -1.0, second = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double o = overlap(i, j);
            if (o > first) {
                second = first;
                first = o;
                best = i;
            } else if (o > second) {
                second = o;
            }
        }
        if (n > 1 && first - second < kMatchAmbiguity) {
            std::ostringstream msg;
            msg << "build_frame: ambiguous eigenbranch matching for reference direction " << j + 1
                << " at gamma = " << gamma << " (overlaps " << first << " and " << second << ")";
            throw FrameMatchingError(gamma, msg.str());
        }
        if (used[static_cast<std::size_t>(best)]) {
            std::ostringstream msg;
            msg << "build_frame: eigenbranch crossing at gamma = " << gamma
                << " (two reference directions map to eigenvector " << best + 1 << ")";
            throw FrameMatchingError(gamma, msg.str());
        }
        used[static_cast<std::size_t>(best)] = true;
        pick[static_cast<std::size_t>(j)] = best;
    }
    f.eigenvalues.resize(n);
    f.basis.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        f.eigenvalues(j) = e.eigenvalues(pick[static_cast<std::size_t>(j)]);
        f.basis.col(j) = e.eigenvectors.col(pick[static_cast<std::size_t>(j)]);
    }
    return f;
}

/// Frame of the η-dressed drift at γ = 0, ascending; anchors every tracked frame.
inline EigenFrame reference_frame(const ControlSystem& sys) { return build_frame(sys, 0.0); }

}  // namespace ilc
