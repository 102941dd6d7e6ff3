// config.hpp: JSON run configuration and its resolution into a LyapunovModel.
//
// Complex entries are [re, im] pairs (plain numbers are read as real), matrices
// are row-major arrays of rows. Errors carry the JSON pointer of the offending node.

#pragma once

#include "ilc/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <variant>

namespace ilc::config {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what)
        : std::runtime_error((path.empty() ? std::string("/") : path) + ": " + what),
          path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

struct SpectrumRequest {
    enum class Mode { automatic, target_and_others, values };
    Mode mode = Mode::automatic;
    double target_value = 0.0;
    std::vector<double> other_values;
    std::vector<double> values;  // one per γ = 0 frame direction
};

using AnyState = std::variant<PureState, DensityMatrix>;

struct RunConfig {
    ControlSystem system;
    std::vector<bool> eta_auto;  // per channel: "eta": "auto"
    ThetaSpec theta;
    SpectrumRequest spectrum;
    FeedbackShape feedback;
    EscapePolicy escape;
    SimulationConfig sim;
    AnyState initial = PureState::basis(1, 0);
    AnyState target = PureState::basis(1, 0);
    double design_tolerance = 1e-10;
    double degeneracy_tolerance = kDegeneracyTolerance;
    std::size_t gamma_grid_points = 100;
    json source;

    bool any_eta_auto() const {
        return std::any_of(eta_auto.begin(), eta_auto.end(), [](bool b) { return b; });
    }
    bool liouville() const { return sim.equation == Equation::liouville; }
};

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kStateNormTolerance = 1e-6;

namespace detail {

inline std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
inline std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

inline const json& require(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) throw ConfigError(child(path, key), "required field is missing");
    return obj.at(key);
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number, got " + std::string(j.type_name()));
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "number is not finite");
    return x;
}

inline double positive(const json& j, const std::string& path) {
    const double x = number(j, path);
    if (!(x > 0.0)) throw ConfigError(path, "must be positive");
    return x;
}

inline Complex complex_entry(const json& j, const std::string& path) {
    if (j.is_number()) return {number(j, path), 0.0};
    if (!j.is_array() || j.size() != 2)
        throw ConfigError(path, "complex entry must be [re, im] or a real number");
    return {number(j[0], child(path, 0)), number(j[1], child(path, 1))};
}

inline ComplexMatrix complex_matrix(const json& j, const std::string& path, std::size_t n) {
    if (!j.is_array() || j.size() != n)
        throw ConfigError(path, "expected " + std::to_string(n) + " rows");
    ComplexMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.size() != n)
            throw ConfigError(child(path, r), "expected " + std::to_string(n) + " entries");
        for (std::size_t c = 0; c < n; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                complex_entry(row[c], child(child(path, r), c));
    }
    return m;
}

inline HermitianOperator hermitian(const json& j, const std::string& path, std::size_t n) {
    const ComplexMatrix m = complex_matrix(j, path, n);
    const double dev = max_abs(m - m.adjoint());
    if (dev > kHermitianTolerance)
        throw ConfigError(path, "matrix is not Hermitian (max |A - A^H| = " + std::to_string(dev) + ")");
    return HermitianOperator(m);
}

// [[re,im],...] or [x,...] is a vector; [[[re,im],...],...] is a matrix.
inline bool looks_like_matrix(const json& j) {
    return j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty() && j[0][0].is_array();
}

inline PureState pure_state(const json& j, const std::string& path, std::size_t n) {
    if (!j.is_array() || j.size() != n)
        throw ConfigError(path, "state vector must have " + std::to_string(n) + " entries");
    ComplexVector v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = complex_entry(j[i], child(path, i));
    const double norm = v.norm();
    if (std::abs(norm - 1.0) > kStateNormTolerance)
        throw ConfigError(path, "state is not normalized (norm " + std::to_string(norm) + ")");
    return PureState::normalized(v);
}

inline DensityMatrix density(const json& j, const std::string& path, std::size_t n) {
    ComplexMatrix m = hermitian(j, path, n).matrix();
    const double tr = m.trace().real();
    if (std::abs(tr - 1.0) > kStateNormTolerance)
        throw ConfigError(path, "density matrix trace is " + std::to_string(tr));
    m /= tr;
    try {
        return DensityMatrix(m);
    } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
    }
}

inline AnyState state(const json& j, const std::string& path, std::size_t n, Equation eq) {
    if (looks_like_matrix(j)) {
        if (eq == Equation::schrodinger)
            throw ConfigError(path, "density matrix given but equation is \"schrodinger\"");
        return density(j, path, n);
    }
    PureState p = pure_state(j, path, n);
    if (eq == Equation::liouville) return DensityMatrix::from_pure(p);
    return p;
}

inline std::vector<double> number_list(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], child(path, i)));
    return out;
}

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError(child(path, it.key()), "unknown field");
    }
}

inline std::size_t count(const json& j, const std::string& path, std::size_t min) {
    if (!j.is_number_integer() && !j.is_number_unsigned())
        throw ConfigError(path, "expected an integer");
    const auto v = j.get<long long>();
    if (v < static_cast<long long>(min))
        throw ConfigError(path, "must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

}  // namespace detail

inline RunConfig parse_config(const json& doc) {
    using namespace detail;
    if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
    reject_unknown(doc, "", {"dim", "H0", "channels", "theta", "spectrum", "initial_state",
                             "target_state", "equation", "dt", "t_final", "escape", "record_stride",
                             "feedback", "stop_fidelity", "design_tolerance", "degeneracy_tolerance",
                             "gamma_grid_points"});
    RunConfig cfg;
    cfg.source = doc;

    const std::size_t n = count(require(doc, "", "dim"), "/dim", 1);
    const HermitianOperator h0 = hermitian(require(doc, "", "H0"), "/H0", n);

    const json& chans = require(doc, "", "channels");
    if (!chans.is_array() || chans.empty()) throw ConfigError("/channels", "expected a non-empty array");
    std::vector<ControlChannel> channels;
    bool any_gamma = false;
    for (std::size_t k = 0; k < chans.size(); ++k) {
        const std::string p = child("/channels", k);
        const json& c = chans[k];
        if (!c.is_object()) throw ConfigError(p, "channel must be an object");
        reject_unknown(c, p, {"H", "K", "eta", "gamma_channel"});
        ControlChannel ch{hermitian(require(c, p, "H"), child(p, "H"), n)};
        ch.K = c.contains("K") ? positive(c["K"], child(p, "K")) : 1.0;
        bool automatic = false;
        if (c.contains("eta")) {
            const json& e = c["eta"];
            if (e.is_string()) {
                if (e.get<std::string>() != "auto") throw ConfigError(child(p, "eta"), "expected a number or \"auto\"");
                automatic = true;
            } else {
                ch.eta = number(e, child(p, "eta"));
            }
        }
        if (c.contains("gamma_channel")) {
            if (!c["gamma_channel"].is_boolean()) throw ConfigError(child(p, "gamma_channel"), "expected a boolean");
            ch.gamma_channel = c["gamma_channel"].get<bool>();
        }
        any_gamma = any_gamma || ch.gamma_channel;
        cfg.eta_auto.push_back(automatic);
        channels.push_back(std::move(ch));
    }
    if (!any_gamma) throw ConfigError("/channels", "at least one channel needs \"gamma_channel\": true");
    cfg.system = ControlSystem(h0, std::move(channels));

    if (doc.contains("theta")) {
        const json& t = doc["theta"];
        if (!t.is_object()) throw ConfigError("/theta", "expected an object");
        reject_unknown(t, "/theta", {"kind", "slope", "gamma_max"});
        if (t.contains("kind") && t["kind"] != "linear_clamped")
            throw ConfigError("/theta/kind", "only \"linear_clamped\" is supported");
        cfg.theta = ThetaSpec(t.contains("slope") ? positive(t["slope"], "/theta/slope") : 0.01,
                              t.contains("gamma_max") ? positive(t["gamma_max"], "/theta/gamma_max") : 0.1);
    }

    if (doc.contains("spectrum")) {
        const json& s = doc["spectrum"];
        if (s.is_string()) {
            if (s.get<std::string>() != "auto") throw ConfigError("/spectrum", "expected \"auto\" or an object");
        } else if (s.is_object()) {
            reject_unknown(s, "/spectrum", {"target_value", "other_values", "values"});
            if (s.contains("values")) {
                if (s.contains("target_value") || s.contains("other_values"))
                    throw ConfigError("/spectrum", "give either \"values\" or \"target_value\"/\"other_values\"");
                cfg.spectrum.mode = SpectrumRequest::Mode::values;
                cfg.spectrum.values = number_list(s["values"], "/spectrum/values");
                if (cfg.spectrum.values.size() != n)
                    throw ConfigError("/spectrum/values", "expected " + std::to_string(n) + " values");
            } else {
                cfg.spectrum.mode = SpectrumRequest::Mode::target_and_others;
                cfg.spectrum.target_value = number(require(s, "/spectrum", "target_value"), "/spectrum/target_value");
                cfg.spectrum.other_values = number_list(require(s, "/spectrum", "other_values"), "/spectrum/other_values");
                if (cfg.spectrum.other_values.size() + 1 != n)
                    throw ConfigError("/spectrum/other_values", "expected " + std::to_string(n - 1) + " values");
            }
        } else {
            throw ConfigError("/spectrum", "expected \"auto\" or an object");
        }
    }

    if (doc.contains("equation")) {
        const json& e = doc["equation"];
        if (e == "schrodinger") cfg.sim.equation = Equation::schrodinger;
        else if (e == "liouville") cfg.sim.equation = Equation::liouville;
        else throw ConfigError("/equation", "expected \"schrodinger\" or \"liouville\"");
    }
    if (doc.contains("dt")) cfg.sim.dt = positive(doc["dt"], "/dt");
    if (doc.contains("t_final")) cfg.sim.t_final = positive(doc["t_final"], "/t_final");
    if (cfg.sim.t_final < cfg.sim.dt * (1.0 - 1e-12)) throw ConfigError("/t_final", "must be >= dt");
    if (doc.contains("record_stride")) cfg.sim.record_stride = count(doc["record_stride"], "/record_stride", 1);
    if (doc.contains("stop_fidelity")) {
        if (doc["stop_fidelity"].is_null()) cfg.sim.stop_fidelity = std::numeric_limits<double>::infinity();
        else cfg.sim.stop_fidelity = positive(doc["stop_fidelity"], "/stop_fidelity");
    }

    cfg.initial = state(require(doc, "", "initial_state"), "/initial_state", n, cfg.sim.equation);
    cfg.target = state(require(doc, "", "target_state"), "/target_state", n, cfg.sim.equation);

    if (doc.contains("escape")) {
        const json& e = doc["escape"];
        if (e.is_null() || (e.is_boolean() && !e.get<bool>())) {
            cfg.escape.enabled = false;
        } else if (e.is_object()) {
            reject_unknown(e, "/escape", {"v_eps", "gamma_eps", "dwell", "alpha_fraction", "enabled"});
            if (e.contains("v_eps")) cfg.escape.v_eps = positive(e["v_eps"], "/escape/v_eps");
            if (e.contains("gamma_eps")) cfg.escape.gamma_eps = positive(e["gamma_eps"], "/escape/gamma_eps");
            if (e.contains("dwell")) cfg.escape.dwell = positive(e["dwell"], "/escape/dwell");
            if (e.contains("alpha_fraction")) {
                cfg.escape.alpha_fraction = number(e["alpha_fraction"], "/escape/alpha_fraction");
                if (!(cfg.escape.alpha_fraction > 0.0 && cfg.escape.alpha_fraction < 1.0))
                    throw ConfigError("/escape/alpha_fraction", "must lie in (0, 1)");
            }
            if (e.contains("enabled")) {
                if (!e["enabled"].is_boolean()) throw ConfigError("/escape/enabled", "expected a boolean");
                cfg.escape.enabled = e["enabled"].get<bool>();
            }
        } else {
            throw ConfigError("/escape", "expected an object, false or null");
        }
    }

    if (doc.contains("feedback")) {
        const json& f = doc["feedback"];
        if (!f.is_object()) throw ConfigError("/feedback", "expected an object");
        reject_unknown(f, "/feedback", {"kind", "scale"});
        const std::string kind = f.value("kind", std::string("identity"));
        if (kind == "identity") cfg.feedback = FeedbackShape::identity();
        else if (kind == "tanh") cfg.feedback = FeedbackShape::scaled_tanh(f.contains("scale") ? positive(f["scale"], "/feedback/scale") : 1.0);
        else throw ConfigError("/feedback/kind", "expected \"identity\" or \"tanh\"");
    }

    if (doc.contains("design_tolerance")) cfg.design_tolerance = positive(doc["design_tolerance"], "/design_tolerance");
    if (doc.contains("degeneracy_tolerance")) cfg.degeneracy_tolerance = positive(doc["degeneracy_tolerance"], "/degeneracy_tolerance");
    if (doc.contains("gamma_grid_points")) cfg.gamma_grid_points = count(doc["gamma_grid_points"], "/gamma_grid_points", 1);
    return cfg;
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
}

inline RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_json(path)); }

// ---------------------------------------------------------------------------
// Resolution: η design directives and spectrum placement
// ---------------------------------------------------------------------------

struct ResolvedRun {
    ControlSystem system;                  ///< with the η actually used
    std::optional<EtaDesign> eta_design;   ///< present when any η was "auto" or design was forced
    SpectrumSpec spectrum;                 ///< bound to γ = 0 frame directions
    std::optional<std::string> spectrum_problem;
    std::size_t target_index = 0;
    EigenFrame reference;

    LyapunovModel model(const ThetaSpec& theta) const { return LyapunovModel(system, spectrum, theta); }
};

inline EtaDesign design_eta_for(const RunConfig& cfg) {
    return std::visit([&](const auto& t) { return design_eta(cfg.system, t, cfg.design_tolerance); },
                      cfg.target);
}

/// Applies "auto" η (or all η when `design_all`) and places the spectrum in the
/// γ = 0 frame. Unreachable targets and non-diagonal density targets throw.
inline ResolvedRun resolve(const RunConfig& cfg, bool design_all = false) {
    ResolvedRun r;
    r.system = cfg.system;
    if (design_all || cfg.any_eta_auto()) {
        EtaDesign d = design_eta_for(cfg);
        std::vector<double> eta = cfg.system.etas();
        for (std::size_t k = 0; k < eta.size(); ++k)
            if (design_all || cfg.eta_auto[k]) eta[k] = d.eta[k];
        r.system = cfg.system.with_etas(eta);
        r.eta_design = std::move(d);
    }
    r.reference = reference_frame(r.system);
    const std::size_t n = r.system.dim();

    if (const auto* p = std::get_if<PureState>(&cfg.target)) {
        r.target_index = target_direction(r.reference, *p);
    } else {
        const RealVector pop = frame_populations(std::get<DensityMatrix>(cfg.target), r.reference);
        Eigen::Index best = 0;
        pop.maxCoeff(&best);
        r.target_index = static_cast<std::size_t>(best);
    }

    std::vector<double> values;
    switch (cfg.spectrum.mode) {
        case SpectrumRequest::Mode::automatic:
            if (const auto* p = std::get_if<PureState>(&cfg.target)) {
                (void)p;
                values = design_spectrum_pure(r.target_index, n).values();
            } else {
                values = design_spectrum_density(std::get<DensityMatrix>(cfg.target), r.reference).values();
            }
            break;
        case SpectrumRequest::Mode::target_and_others: {
            std::size_t next = 0;
            values.resize(n);
            for (std::size_t j = 0; j < n; ++j)
                values[j] = (j == r.target_index) ? cfg.spectrum.target_value : cfg.spectrum.other_values[next++];
            break;
        }
        case SpectrumRequest::Mode::values: values = cfg.spectrum.values; break;
    }
    r.spectrum_problem = SpectrumSpec::violation(values);
    r.spectrum = r.spectrum_problem ? SpectrumSpec::unvalidated(values) : SpectrumSpec(values);
    return r;
}

/// Source document with η and spectrum replaced by explicit resolved values.
inline json completed_config(const RunConfig& cfg, const ResolvedRun& r) {
    json out = cfg.source;
    for (std::size_t k = 0; k < r.system.size(); ++k) out["channels"][k]["eta"] = r.system.channel(k).eta;
    out["spectrum"] = json{{"values", r.spectrum.values()}};
    return out;
}

// ---------------------------------------------------------------------------
// Serialization helpers
// ---------------------------------------------------------------------------

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline json matrix_json(const ComplexMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json vector_json(const ComplexVector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v(i)));
    return out;
}

}  // namespace ilc::config
