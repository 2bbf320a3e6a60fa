#pragma once

#include "phmg/eip.hpp"
#include "phmg/model.hpp"
#include "phmg/trajectory.hpp"

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace phmg {

enum class Method { trapezoidal, rk4 };

const char* to_string(Method m);

struct SolverSettings {
    Method method = Method::trapezoidal;
    double h = 1e-5;            // s
    double newton_tol = 1e-10;  // on |dx_i| / max(|x_i|, scale_i)
    double h_min = 1e-8;        // s
    int max_newton = 12;
    int log_every = 100;        // steps between logged samples
    Exec exec = Exec::serial;
    // Solve an equilibrium per segment and log H_MG against it.
    bool monitor = true;

    void validate() const;
    bool operator==(const SolverSettings&) const = default;
};

struct PlugIn {
    std::string dgu;
    bool operator==(const PlugIn&) const = default;
};

struct PlugOut {
    std::string dgu;
    bool operator==(const PlugOut&) const = default;
};

// Multiplies every ZIP coefficient, or P0 and Q0, of the node's load.
struct LoadScale {
    std::string node;
    double factor = 1.0;
    bool operator==(const LoadScale&) const = default;
};

struct RefChange {
    std::string dgu;
    VoltageReference ref;  // volts
    bool operator==(const RefChange&) const = default;
};

struct Event {
    double t = 0.0;
    std::variant<PlugIn, PlugOut, LoadScale, RefChange> action;

    std::string kind() const;
    std::string describe() const;
    bool operator==(const Event&) const = default;
};

struct Scenario {
    std::string name;
    std::shared_ptr<const MicrogridGraph> graph;
    ActiveSet initial_active;
    double horizon = 0.0;  // s
    std::vector<Event> events;  // sorted by time, strictly inside (0, horizon)
    SolverSettings solver;
    std::optional<Vec> x0;  // defaults to NetworkModel::default_initial_state
    double band = 2.0;      // V, settling band

    // Events sorted and inside (0, horizon); targets exist; factors positive.
    void validate() const;
    bool operator==(const Scenario& o) const;
};

struct SimState {
    double t = 0.0;
    Vec x;
    ModelConfig cfg;
};

// Continuous states carry over; a plugged-in DGU restarts from zero filter current and integrator.
SimState apply_event(const MicrogridGraph& g, SimState s, const Event& e);

Trajectory integrate(const Scenario& sc);

// One window per stretch between consecutive event times.
struct WindowMetrics {
    std::string dgu;
    double t_start = 0.0;
    double t_end = 0.0;
    bool controlled = true;           // connected with a feedback controller
    std::optional<double> settle;     // s after t_start; empty when it never settles
    double overshoot = 0.0;           // V
    double max_deviation = 0.0;       // V, max of |dV_d|, |dV_q| over the window
    double final_error = 0.0;         // V, at t_end
};

struct SettlingReport {
    double band = 0.0;
    std::vector<WindowMetrics> windows;
};

// Settle time: first instant after which both axis errors stay inside the band until t_end.
// Overshoot: per axis, the excursion opposite to an initial error outside the band, else the
// largest error; the larger axis is reported.
SettlingReport settling_metrics(const Trajectory& traj, double band);

}  // namespace phmg
