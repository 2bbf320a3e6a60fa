#pragma once

#include "phmg/eip.hpp"
#include "phmg/sim.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace phmg {

// Header `t, <node>.Vd, <node>.Vq, <dgu>.Itd, <dgu>.Itq, <dgu>.ud, <dgu>.uq, <dgu>.sat, <line>.Id, <line>.Iq, H_MG`.
// Comment lines before the header give `# ref t=<s> <dgu> <node> <Vd> <Vq>` per segment and
// `# event t=<s> <kind>` per event. u is the applied (post-saturation) command.
void write_csv(std::ostream& os, const Trajectory& traj);

struct CsvRef {
    double t = 0.0;
    std::string dgu;
    std::string node;
    Vec2 V = Vec2::Zero();
};

struct CsvEvent {
    double t = 0.0;
    std::string kind;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<CsvRef> refs;
    std::vector<CsvEvent> events;

    // Index of a column; throws ValidationError when absent.
    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& is);

// Writes voltages.svg, errors.svg and errors_zoom.svg; returns the written paths.
std::vector<std::string> write_plots(const CsvTable& table, const std::string& dir, double band);

struct SegmentVerdict {
    double t0 = 0.0;
    double t1 = 0.0;
    bool has_equilibrium = false;
    std::string note;
    LyapunovSeries series;
};

// Lyapunov verdict per event-free segment; segments without an equilibrium report the reason.
std::vector<SegmentVerdict> lyapunov_verdicts(const Trajectory& traj, double tolerance = 1e-6);

// JSON metrics document: solver statistics, settling windows and Lyapunov verdicts.
std::string metrics_json(const Trajectory& traj, const SettlingReport& rep, const std::vector<SegmentVerdict>& lyap);

// Human-readable summary of the same content.
std::string metrics_text(const Trajectory& traj, const SettlingReport& rep, const std::vector<SegmentVerdict>& lyap);

}  // namespace phmg
