#include "phmg/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace phmg {

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

void write_csv(std::ostream& os, const Trajectory& traj) {
    const auto& g = *traj.graph;
    for (const auto& seg : traj.segments) {
        for (std::size_t i = 0; i < g.dgus.size(); ++i) {
            const auto& r = seg.config.refs[i];
            os << "# ref t=" << num(seg.t0) << ' ' << g.dgus[i].id << ' ' << g.nodes[g.dgus[i].node].id << ' '
               << num(r.Vd) << ' ' << num(r.Vq) << '\n';
        }
    }
    for (const auto& e : traj.events) os << "# event t=" << num(e.t) << ' ' << e.kind << '\n';

    os << 't';
    for (const auto& n : g.nodes) os << ',' << n.id << ".Vd," << n.id << ".Vq";
    for (const auto& d : g.dgus) {
        os << ',' << d.id << ".Itd," << d.id << ".Itq," << d.id << ".ud," << d.id << ".uq," << d.id << ".sat";
    }
    for (const auto& l : g.lines) os << ',' << l.id << ".Id," << l.id << ".Iq";
    os << ",H_MG\n";

    for (const auto& seg : traj.segments) {
        const NetworkModel m(traj.graph, seg.config);
        for (std::size_t s = seg.first; s <= seg.last; ++s) {
            const Vec& x = traj.x[s];
            os << num(traj.t[s]);
            for (std::size_t k = 0; k < g.nodes.size(); ++k) {
                const Vec2 V = m.node_voltage(x, k);
                os << ',' << num(V[0]) << ',' << num(V[1]);
            }
            for (std::size_t i = 0; i < g.dgus.size(); ++i) {
                const Vec2 I = m.dgu_current(x, i);
                const auto& u = traj.u[s][i];
                os << ',' << num(I[0]) << ',' << num(I[1]) << ',' << num(u.applied[0]) << ',' << num(u.applied[1]) << ','
                   << (u.saturated ? 1 : 0);
            }
            for (std::size_t l = 0; l < g.lines.size(); ++l) {
                const Vec2 I = m.line_current(x, l);
                os << ',' << num(I[0]) << ',' << num(I[1]);
            }
            os << ',' << num(traj.H[s]) << '\n';
        }
    }
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ValidationError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    auto bad = [&lineno](const std::string& what) {
        throw ValidationError("CSV line " + std::to_string(lineno) + ": " + what);
    };
    auto parse_t = [&](const std::string& tok) {
        if (tok.rfind("t=", 0) != 0) bad("expected t=<seconds>");
        return std::stod(tok.substr(2));
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string tag, tt;
            ls >> tag >> tt;
            if (tag == "ref") {
                CsvRef r;
                r.t = parse_t(tt);
                if (!(ls >> r.dgu >> r.node >> r.V[0] >> r.V[1])) bad("malformed ref comment");
                t.refs.push_back(r);
            } else if (tag == "event") {
                CsvEvent e;
                e.t = parse_t(tt);
                std::getline(ls >> std::ws, e.kind);
                t.events.push_back(e);
            }
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (t.columns.empty()) {
            if (cells.empty() || cells[0] != "t") bad("expected a header starting with 't'");
            t.columns = cells;
            continue;
        }
        if (cells.size() != t.columns.size()) bad("expected " + std::to_string(t.columns.size()) + " fields");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                row.push_back(c == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(c));
            } catch (const std::exception&) {
                bad("not a number: '" + c + "'");
            }
        }
        t.rows.push_back(std::move(row));
    }
    if (t.columns.empty()) throw ValidationError("CSV has no header");
    return t;
}

namespace {

struct Series {
    std::string label;
    std::vector<double> t;
    std::vector<double> y;
    std::string color;
    bool dashed = false;
};

const char* kPalette[] = {"#1f4e9c", "#c0392b", "#d4a017", "#7d3c98", "#17a2b8", "#222222",
                          "#2e8b57", "#e67e22", "#7f8c8d", "#8e44ad"};

// Static line chart with axes, ticks, event markers and a legend.
std::string svg_chart(const std::string& title, const std::string& ylabel, const std::vector<Series>& series,
                      const std::vector<CsvEvent>& events, std::optional<std::pair<double, double>> ylim) {
    constexpr double W = 960, H = 540, L = 80, R = 170, T = 40, B = 60;
    double t0 = std::numeric_limits<double>::infinity(), t1 = -t0, y0 = t0, y1 = -t0;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.t.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            t0 = std::min(t0, s.t[i]);
            t1 = std::max(t1, s.t[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!std::isfinite(t0)) t0 = 0, t1 = 1, y0 = 0, y1 = 1;
    if (ylim) std::tie(y0, y1) = *ylim;
    if (t1 <= t0) t1 = t0 + 1.0;
    if (y1 <= y0) y0 -= 1.0, y1 += 1.0;
    const double pad = 0.05 * (y1 - y0);
    if (!ylim) y0 -= pad, y1 += pad;
    auto px = [&](double t) { return L + (t - t0) / (t1 - t0) * (W - L - R); };
    auto py = [&](double y) { return T + (y1 - std::clamp(y, y0, y1)) / (y1 - y0) * (H - T - B); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 6; ++k) {
        const double t = t0 + (t1 - t0) * k / 6.0, y = y0 + (y1 - y0) * k / 6.0;
        o << "<line x1=\"" << px(t) << "\" y1=\"" << T << "\" x2=\"" << px(t) << "\" y2=\"" << H - B
          << "\" stroke=\"#e5e5e5\"/>\n";
        o << "<text x=\"" << px(t) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << num(std::round(t * 1000) / 1000)
          << "</text>\n";
        o << "<line x1=\"" << L << "\" y1=\"" << py(y) << "\" x2=\"" << W - R << "\" y2=\"" << py(y)
          << "\" stroke=\"#e5e5e5\"/>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << num(std::round(y * 100) / 100)
          << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">t (s)</text>\n";
    o << "<text transform=\"translate(18," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel
      << "</text>\n";
    for (const auto& e : events) {
        if (e.t < t0 || e.t > t1) continue;
        o << "<line x1=\"" << px(e.t) << "\" y1=\"" << T << "\" x2=\"" << px(e.t) << "\" y2=\"" << H - B
          << "\" stroke=\"#999\" stroke-dasharray=\"2,3\"><title>" << e.kind << "</title></line>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.3\""
          << (s.dashed ? " stroke-dasharray=\"6,3\"" : "") << " points=\"";
        const std::size_t stride = std::max<std::size_t>(1, s.t.size() / 2000);
        for (std::size_t i = 0; i < s.t.size(); i += stride) {
            if (std::isfinite(s.y[i])) o << px(s.t[i]) << ',' << py(s.y[i]) << ' ';
        }
        o << "\"/>\n";
        const double ly = T + 14 + 16.0 * static_cast<double>(k);
        o << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R + 34 << "\" y2=\"" << ly - 4
          << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6,3\"" : "")
          << "/>\n";
        o << "<text x=\"" << W - R + 40 << "\" y=\"" << ly << "\">" << s.label << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace

std::vector<std::string> write_plots(const CsvTable& table, const std::string& dir, double band) {
    if (table.refs.empty()) throw ValidationError("CSV carries no reference comments; cannot identify DGU nodes");
    std::filesystem::create_directories(dir);
    const std::size_t tc = table.column("t");
    std::vector<std::string> dgus;
    for (const auto& r : table.refs) {
        if (std::find(dgus.begin(), dgus.end(), r.dgu) == dgus.end()) dgus.push_back(r.dgu);
    }
    std::vector<Series> volt, err;
    for (std::size_t k = 0; k < dgus.size(); ++k) {
        std::vector<const CsvRef*> refs;
        for (const auto& r : table.refs) {
            if (r.dgu == dgus[k]) refs.push_back(&r);
        }
        const std::string node = refs.front()->node;
        const std::size_t cd = table.column(node + ".Vd"), cq = table.column(node + ".Vq");
        const std::string color = kPalette[k % std::size(kPalette)];
        Series vd{dgus[k] + " Vd", {}, {}, color, false}, vq{dgus[k] + " Vq", {}, {}, color, true};
        Series ed{dgus[k] + " dVd", {}, {}, color, false}, eq{dgus[k] + " dVq", {}, {}, color, true};
        std::size_t ri = 0;
        for (const auto& row : table.rows) {
            const double t = row[tc];
            // Latest reference at or before t; a segment boundary repeats t, so prefer the later one.
            while (ri + 1 < refs.size() && refs[ri + 1]->t <= t) ++ri;
            const Vec2 ref = refs[ri]->V;
            vd.t.push_back(t), vd.y.push_back(row[cd]);
            vq.t.push_back(t), vq.y.push_back(row[cq]);
            ed.t.push_back(t), ed.y.push_back(row[cd] - ref[0]);
            eq.t.push_back(t), eq.y.push_back(row[cq] - ref[1]);
        }
        volt.push_back(std::move(vd));
        volt.push_back(std::move(vq));
        err.push_back(std::move(ed));
        err.push_back(std::move(eq));
    }
    const std::filesystem::path base(dir);
    const std::vector<std::pair<std::string, std::string>> files = {
        {"voltages.svg", svg_chart("DGU node voltages", "V (V)", volt, table.events, std::nullopt)},
        {"errors.svg", svg_chart("DGU voltage errors", "dV (V)", err, table.events, std::nullopt)},
        {"errors_zoom.svg",
         svg_chart("DGU voltage errors, zoomed", "dV (V)", err, table.events, std::pair{-5.0 * band, 5.0 * band})},
    };
    std::vector<std::string> out;
    for (const auto& [name, body] : files) {
        const auto p = base / name;
        std::ofstream f(p);
        if (!f) throw ValidationError("cannot write " + p.string());
        f << body;
        out.push_back(p.string());
    }
    return out;
}

std::vector<SegmentVerdict> lyapunov_verdicts(const Trajectory& traj, double tolerance) {
    std::vector<SegmentVerdict> out;
    for (std::size_t k = 0; k < traj.segments.size(); ++k) {
        const auto& seg = traj.segments[k];
        SegmentVerdict v;
        v.t0 = seg.t0;
        v.t1 = seg.t1;
        v.has_equilibrium = seg.eq.has_value();
        v.note = seg.eq_note;
        if (seg.eq) {
            try {
                v.series = lyapunov_monitor(traj, k, tolerance);
            } catch (const Error& e) {
                v.has_equilibrium = false;
                v.note = e.what();
            }
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::string metrics_json(const Trajectory& traj, const SettlingReport& rep, const std::vector<SegmentVerdict>& lyap) {
    using nlohmann::json;
    auto finite = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json doc;
    doc["solver"] = {{"steps", traj.stats.steps},
                     {"rejected", traj.stats.rejected},
                     {"jacobians", traj.stats.jacobians},
                     {"newton_iterations", traj.stats.newton_iterations},
                     {"field_evaluations", traj.stats.field_evaluations},
                     {"min_step", traj.stats.min_step}};
    doc["band_V"] = rep.band;
    json windows = json::array();
    for (const auto& w : rep.windows) {
        windows.push_back({{"dgu", w.dgu},
                           {"t_start", w.t_start},
                           {"t_end", w.t_end},
                           {"controlled", w.controlled},
                           {"settle_s", w.settle ? json(*w.settle) : json(nullptr)},
                           {"overshoot_V", w.overshoot},
                           {"max_deviation_V", w.max_deviation},
                           {"final_error_V", w.final_error}});
    }
    doc["windows"] = std::move(windows);
    json segs = json::array();
    for (const auto& v : lyap) {
        json j = {{"t0", v.t0}, {"t1", v.t1}, {"has_equilibrium", v.has_equilibrium}};
        if (v.has_equilibrium) {
            j["non_increasing"] = v.series.non_increasing;
            j["violations"] = v.series.violations;
            j["max_relative_increase"] = finite(v.series.max_relative_increase);
            j["H_start"] = finite(v.series.H.empty() ? 0.0 : v.series.H.front());
            j["H_end"] = finite(v.series.H.empty() ? 0.0 : v.series.H.back());
        } else {
            j["note"] = v.note;
        }
        segs.push_back(std::move(j));
    }
    doc["lyapunov"] = std::move(segs);
    return doc.dump(2);
}

std::string metrics_text(const Trajectory& traj, const SettlingReport& rep, const std::vector<SegmentVerdict>& lyap) {
    std::ostringstream o;
    o << "steps " << traj.stats.steps << ", rejected " << traj.stats.rejected << ", jacobians " << traj.stats.jacobians
      << ", field evaluations " << traj.stats.field_evaluations << "\n";
    o << "settling (band " << rep.band << " V)\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-8s %8s %8s %10s %12s %12s %12s\n", "dgu", "t_start", "t_end", "settle_s",
                  "overshoot_V", "max_dev_V", "final_err_V");
    o << buf;
    for (const auto& w : rep.windows) {
        if (!w.controlled) {
            std::snprintf(buf, sizeof buf, "  %-8s %8.3f %8.3f %10s\n", w.dgu.c_str(), w.t_start, w.t_end, "uncontrolled");
        } else {
            const std::string settle = w.settle ? num(std::round(*w.settle * 1e4) / 1e4) : "unsettled";
            std::snprintf(buf, sizeof buf, "  %-8s %8.3f %8.3f %10s %12.3f %12.3f %12.3e\n", w.dgu.c_str(), w.t_start,
                          w.t_end, settle.c_str(), w.overshoot, w.max_deviation, w.final_error);
        }
        o << buf;
    }
    o << "lyapunov\n";
    for (const auto& v : lyap) {
        std::snprintf(buf, sizeof buf, "  [%.3f, %.3f] ", v.t0, v.t1);
        o << buf;
        if (v.has_equilibrium) {
            o << (v.series.non_increasing ? "non-increasing" : "INCREASING") << ", max relative increase "
              << num(v.series.max_relative_increase) << ", violations " << v.series.violations << "\n";
        } else {
            o << "no equilibrium: " << v.note << "\n";
        }
    }
    return o.str();
}

}  // namespace phmg
