// io.hpp: atomic file writes, trajectory CSV, deterministic SVG line charts.

#pragma once

#include "ilc/simulator.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>

namespace ilc::io {

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

/// Writes `content` to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::vector<std::string> csv_columns(std::size_t n_levels, std::size_t n_channels) {
    std::vector<std::string> cols{"t"};
    for (std::size_t i = 1; i <= n_levels; ++i) cols.push_back("pop_" + std::to_string(i));
    cols.push_back("gamma");
    for (std::size_t k = 1; k <= n_channels; ++k) cols.push_back("v_" + std::to_string(k));
    for (std::size_t k = 1; k <= n_channels; ++k) cols.push_back("u_" + std::to_string(k));
    for (const char* c : {"V", "Vdot", "fidelity", "escape"}) cols.emplace_back(c);
    return cols;
}

template <class State>
std::string trajectory_csv(const TrajectoryRecord<State>& rec, std::size_t n_levels,
                           std::size_t n_channels) {
    std::string out;
    const auto cols = csv_columns(n_levels, n_channels);
    for (std::size_t c = 0; c < cols.size(); ++c) out += (c ? "," : "") + cols[c];
    out += '\n';
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const ControlSample& s = rec.samples[i];
        out += format_double(rec.times[i]);
        for (Eigen::Index l = 0; l < rec.populations[i].size(); ++l)
            out += "," + format_double(rec.populations[i](l));
        out += "," + format_double(s.gamma);
        for (double v : s.v) out += "," + format_double(v);
        for (double u : s.u) out += "," + format_double(u);
        out += "," + format_double(s.V) + "," + format_double(s.Vdot) + "," +
               format_double(rec.fidelities[i]) + "," + (s.escape_active ? "1" : "0");
        out += '\n';
    }
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::optional<std::size_t> column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    }
    std::vector<double> values(std::size_t col) const {
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto& r : rows) v.push_back(r.at(col));
        return v;
    }
};

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw CsvError("missing header in " + path.string());
    t.header = split_commas(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_commas(line);
        if (cells.size() != t.header.size())
            throw CsvError("line " + std::to_string(lineno) + ": expected " +
                           std::to_string(t.header.size()) + " fields, got " +
                           std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            double x = 0.0;
            const auto res = std::from_chars(c.data(), c.data() + c.size(), x);
            if (res.ec != std::errc() || res.ptr != c.data() + c.size())
                throw CsvError("line " + std::to_string(lineno) + ": bad number '" + c + "'");
            row.push_back(x);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

struct Series {
    std::string name;
    std::vector<double> y;
};

struct ChartSpec {
    std::string title;
    std::string x_label = "t (a.u.)";
    std::string y_label;
    std::optional<std::pair<double, double>> y_range;
    std::size_t max_points = 2000;  ///< polylines are decimated by a fixed stride beyond this
};

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

namespace detail {
inline std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}
inline std::string tick(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}
inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                           "#9467bd", "#8c564b", "#e377c2", "#17becf"};
}  // namespace detail

/// Line chart with axes, ticks, labels and a legend. Same input, same bytes.
inline std::string svg_line_chart(const std::vector<double>& x, const std::vector<Series>& series,
                                  const ChartSpec& spec) {
    if (x.empty()) throw std::invalid_argument("svg_line_chart: no data");
    const double W = 800, H = 500, left = 80, right = 170, top = 50, bottom = 60;
    const double pw = W - left - right, ph = H - top - bottom;

    double x0 = x.front(), x1 = x.back();
    if (x1 <= x0) x1 = x0 + 1.0;
    double y0, y1;
    if (spec.y_range) {
        std::tie(y0, y1) = *spec.y_range;
    } else {
        y0 = std::numeric_limits<double>::infinity();
        y1 = -y0;
        for (const auto& s : series)
            for (double v : s.y) {
                y0 = std::min(y0, v);
                y1 = std::max(y1, v);
            }
        if (!(y1 > y0)) {
            y0 -= 0.5;
            y1 += 0.5;
        }
        const double pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
    }
    auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return top + (1.0 - (v - y0) / (y1 - y0)) * ph; };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\">\n";
    s += "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
    s += "<text x=\"" + detail::fixed(left + pw / 2) + "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"18\">" +
         xml_escape(spec.title) + "</text>\n";
    s += "<rect x=\"" + detail::fixed(left) + "\" y=\"" + detail::fixed(top) + "\" width=\"" + detail::fixed(pw) +
         "\" height=\"" + detail::fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

    constexpr int kTicks = 5;
    for (int i = 0; i <= kTicks; ++i) {
        const double xv = x0 + (x1 - x0) * i / kTicks;
        const double yv = y0 + (y1 - y0) * i / kTicks;
        s += "<line x1=\"" + detail::fixed(px(xv)) + "\" y1=\"" + detail::fixed(top + ph) + "\" x2=\"" +
             detail::fixed(px(xv)) + "\" y2=\"" + detail::fixed(top + ph + 5) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + detail::fixed(px(xv)) + "\" y=\"" + detail::fixed(top + ph + 20) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + detail::tick(xv) + "</text>\n";
        s += "<line x1=\"" + detail::fixed(left - 5) + "\" y1=\"" + detail::fixed(py(yv)) + "\" x2=\"" +
             detail::fixed(left) + "\" y2=\"" + detail::fixed(py(yv)) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + detail::fixed(left - 8) + "\" y=\"" + detail::fixed(py(yv) + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" + detail::tick(yv) + "</text>\n";
    }
    s += "<text x=\"" + detail::fixed(left + pw / 2) + "\" y=\"" + detail::fixed(H - 15) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" + xml_escape(spec.x_label) + "</text>\n";
    s += "<text x=\"20\" y=\"" + detail::fixed(top + ph / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 20 " +
         detail::fixed(top + ph / 2) + ")\">" + xml_escape(spec.y_label) + "</text>\n";

    const std::size_t stride = std::max<std::size_t>(1, (x.size() + spec.max_points - 1) / spec.max_points);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* color = detail::kPalette[k % std::size(detail::kPalette)];
        s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < x.size(); i += stride) {
            s += (first ? "" : " ") + detail::fixed(px(x[i])) + "," + detail::fixed(py(series[k].y[i]));
            first = false;
        }
        if ((x.size() - 1) % stride != 0)
            s += " " + detail::fixed(px(x.back())) + "," + detail::fixed(py(series[k].y.back()));
        s += "\"/>\n";
        const double ly = top + 15 + 22.0 * static_cast<double>(k);
        s += "<line x1=\"" + detail::fixed(left + pw + 15) + "\" y1=\"" + detail::fixed(ly) + "\" x2=\"" +
             detail::fixed(left + pw + 45) + "\" y2=\"" + detail::fixed(ly) + "\" stroke=\"" + color +
             "\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + detail::fixed(left + pw + 52) + "\" y=\"" + detail::fixed(ly + 4) +
             "\" font-family=\"sans-serif\" font-size=\"13\">" + xml_escape(series[k].name) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

enum class PlotKind { populations, controls, lyapunov };

inline std::optional<PlotKind> parse_plot_kind(const std::string& s) {
    if (s == "populations") return PlotKind::populations;
    if (s == "controls") return PlotKind::controls;
    if (s == "lyapunov") return PlotKind::lyapunov;
    return std::nullopt;
}

inline const char* plot_kind_name(PlotKind k) {
    switch (k) {
        case PlotKind::populations: return "populations";
        case PlotKind::controls: return "controls";
        case PlotKind::lyapunov: return "lyapunov";
    }
    return "?";
}

/// Column names a plot kind draws, resolved against the header (prefix match for pop_/u_).
inline std::vector<std::string> plot_columns(PlotKind kind, const std::vector<std::string>& header) {
    std::vector<std::string> out;
    auto with_prefix = [&](const std::string& p) {
        for (const auto& h : header)
            if (h.rfind(p, 0) == 0) out.push_back(h);
    };
    switch (kind) {
        case PlotKind::populations: with_prefix("pop_"); break;
        case PlotKind::controls: with_prefix("u_"); break;
        case PlotKind::lyapunov: out.push_back("V"); break;
    }
    return out;
}

}  // namespace ilc::io
