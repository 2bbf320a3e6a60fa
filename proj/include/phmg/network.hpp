#pragma once

#include "phmg/components.hpp"
#include "phmg/controllers.hpp"
#include "phmg/types.hpp"

#include <Eigen/SparseCore>

#include <optional>
#include <string>
#include <vector>

namespace phmg {

// A member node of the grid: a DGU node or a lone-standing load node.
struct Node {
    std::string id;
    // Static load at a lone-standing node; DGU-node loads live in DguParams::local_load.
    std::optional<LoadModel> load;
    std::string load_id;

    bool operator==(const Node&) const = default;
};

struct Dgu {
    std::string id;
    std::size_t node = 0;
    DguParams plant;  // nominal filter; the simulated node capacitance adds line legs
    ControllerConfig ctrl;
    std::string load_id;

    bool operator==(const Dgu&) const = default;
};

// Positive current flows from `from` to `to`.
struct Line {
    std::string id;
    std::size_t from = 0;
    std::size_t to = 0;
    LineParams params;

    bool operator==(const Line&) const = default;
};

struct MicrogridGraph {
    double V0 = 0.0;
    double omega0 = 0.0;
    std::vector<Node> nodes;
    std::vector<Dgu> dgus;
    std::vector<Line> lines;

    std::optional<std::size_t> dgu_at(std::size_t node) const;
    // Load attached at a node, whether lone-standing or local to a DGU.
    const LoadModel* load_at(std::size_t node) const;
    std::optional<std::size_t> find_node(const std::string& id) const;
    std::optional<std::size_t> find_dgu(const std::string& id) const;
    std::optional<std::size_t> find_line(const std::string& id) const;

    // Checks ids, endpoints, self-loops, component parameters and lumped capacitances.
    void validate() const;
    bool operator==(const MicrogridGraph&) const = default;
};

struct ActiveSet {
    std::vector<bool> node;
    std::vector<bool> line;
    // Whether each DGU's VSI and filter branch is connected to its node.
    std::vector<bool> dgu;

    static ActiveSet all(const MicrogridGraph& g);
    bool operator==(const ActiveSet&) const = default;
};

// d = Phi z over the stacked ports of the active nodes (2 each) and lines (4 each).
struct CouplingMap {
    std::vector<int> node_offset;  // -1 when inactive
    std::vector<int> line_offset;
    int dim = 0;
    Eigen::SparseMatrix<double, Eigen::RowMajor> phi;

    Mat dense() const { return Mat(phi); }
};

CouplingMap build_coupling(const MicrogridGraph& g, const ActiveSet& active);

Vec coupling_inputs(const CouplingMap& map, const Vec& z);

enum class TopologyAction { plug_in, plug_out };

struct TopologyEvent {
    TopologyAction action = TopologyAction::plug_in;
    std::size_t dgu = 0;
};

struct TopologyUpdate {
    ActiveSet active;
    CouplingMap coupling;
};

// Only the VSI branch changes; the node, its load and its lines stay active.
TopologyUpdate apply_topology_event(const MicrogridGraph& g, const ActiveSet& active, const TopologyEvent& ev);

// Active nodes joined by active lines form one component.
bool weakly_connected(const MicrogridGraph& g, const ActiveSet& active);

}  // namespace phmg
