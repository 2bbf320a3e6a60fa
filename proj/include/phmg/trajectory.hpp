#pragma once

#include "phmg/eip.hpp"
#include "phmg/model.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace phmg {

struct EventMarker {
    double t = 0.0;
    std::size_t sample = 0;  // first sample after the event
    std::string kind;
};

// Samples [first, last] share one configuration; last is the pre-event sample.
struct TrajectorySegment {
    double t0 = 0.0;
    double t1 = 0.0;
    std::size_t first = 0;
    std::size_t last = 0;
    ModelConfig config;
    std::optional<NetworkEquilibrium> eq;
    std::string eq_note;
};

struct SolverStats {
    std::size_t steps = 0;
    std::size_t rejected = 0;
    std::size_t jacobians = 0;
    std::size_t newton_iterations = 0;
    std::size_t field_evaluations = 0;
    double min_step = 0.0;
};

struct Trajectory {
    std::shared_ptr<const MicrogridGraph> graph;
    std::vector<double> t;
    std::vector<Vec> x;
    std::vector<Vec> z;
    std::vector<Vec> d;
    std::vector<std::vector<DguCommand>> u;
    std::vector<double> H;  // NaN when the segment has no equilibrium
    std::vector<EventMarker> events;
    std::vector<TrajectorySegment> segments;
    SolverStats stats;

    std::size_t size() const { return t.size(); }
    std::size_t segment_of(std::size_t sample) const;
    // Model for the configuration in force at a sample.
    NetworkModel model_at(std::size_t sample) const;
};

}  // namespace phmg
