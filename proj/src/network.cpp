#include "phmg/network.hpp"

#include <numeric>
#include <set>

namespace phmg {

std::optional<std::size_t> MicrogridGraph::dgu_at(std::size_t node) const {
    for (std::size_t i = 0; i < dgus.size(); ++i) {
        if (dgus[i].node == node) return i;
    }
    return std::nullopt;
}

const LoadModel* MicrogridGraph::load_at(std::size_t node) const {
    if (auto i = dgu_at(node)) {
        const auto& ll = dgus[*i].plant.local_load;
        return ll ? &*ll : nullptr;
    }
    const auto& l = nodes.at(node).load;
    return l ? &*l : nullptr;
}

namespace {

template <typename T>
std::optional<std::size_t> find_by_id(const std::vector<T>& items, const std::string& id) {
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].id == id) return i;
    }
    return std::nullopt;
}

template <typename T>
void unique_ids(const std::vector<T>& items, const char* kind) {
    std::set<std::string> seen;
    for (const auto& it : items) {
        if (it.id.empty()) throw ValidationError(std::string(kind) + " with empty id");
        if (!seen.insert(it.id).second) throw ValidationError(std::string("duplicate ") + kind + " id '" + it.id + "'");
    }
}

}  // namespace

std::optional<std::size_t> MicrogridGraph::find_node(const std::string& id) const { return find_by_id(nodes, id); }
std::optional<std::size_t> MicrogridGraph::find_dgu(const std::string& id) const { return find_by_id(dgus, id); }
std::optional<std::size_t> MicrogridGraph::find_line(const std::string& id) const { return find_by_id(lines, id); }

void MicrogridGraph::validate() const {
    if (!(V0 > 0.0)) throw ValidationError("base voltage V0 must be positive");
    if (!(omega0 > 0.0)) throw ValidationError("omega0 must be positive");
    if (nodes.empty()) throw ValidationError("grid has no nodes");
    unique_ids(nodes, "node");
    unique_ids(dgus, "DGU");
    unique_ids(lines, "line");

    std::vector<int> dgu_count(nodes.size(), 0);
    for (const auto& d : dgus) {
        if (d.node >= nodes.size()) throw ValidationError("DGU '" + d.id + "' refers to a missing node");
        if (++dgu_count[d.node] > 1) throw ValidationError("node '" + nodes[d.node].id + "' hosts more than one DGU");
        if (nodes[d.node].load) {
            throw ValidationError("node '" + nodes[d.node].id + "' has a DGU, its load must be the DGU's local load");
        }
        try {
            d.plant.validate();
            d.ctrl.ref.validate();
            if (d.ctrl.kind == ControllerKind::ida_pbc) d.ctrl.ida.validate();
            if (d.ctrl.sat) d.ctrl.sat->validate();
        } catch (const ValidationError& e) {
            throw ValidationError("DGU '" + d.id + "': " + e.what());
        }
    }
    for (const auto& n : nodes) {
        if (n.load) {
            try {
                n.load->validate();
            } catch (const ValidationError& e) {
                throw ValidationError("load at node '" + n.id + "': " + e.what());
            }
        }
    }
    for (const auto& l : lines) {
        if (l.from >= nodes.size() || l.to >= nodes.size()) {
            throw ValidationError("line '" + l.id + "' refers to a missing node");
        }
        if (l.from == l.to) throw ValidationError("line '" + l.id + "' is a self-loop");
        try {
            l.params.validate();
        } catch (const ValidationError& e) {
            throw ValidationError("line '" + l.id + "': " + e.what());
        }
    }
    const auto legs = effective_capacitances(*this);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (!dgu_at(k) && nodes[k].load && std::abs(nodes[k].load->C - legs[k]) > 1e-12 * legs[k]) {
            throw ValidationError("load node '" + nodes[k].id + "' capacitance disagrees with its line legs");
        }
    }
}

ActiveSet ActiveSet::all(const MicrogridGraph& g) {
    return {std::vector<bool>(g.nodes.size(), true), std::vector<bool>(g.lines.size(), true),
            std::vector<bool>(g.dgus.size(), true)};
}

bool weakly_connected(const MicrogridGraph& g, const ActiveSet& active) {
    std::vector<std::size_t> parent(g.nodes.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](std::size_t k) {
        while (parent[k] != k) k = parent[k] = parent[parent[k]];
        return k;
    };
    for (std::size_t l = 0; l < g.lines.size(); ++l) {
        if (!active.line[l]) continue;
        parent[root(g.lines[l].from)] = root(g.lines[l].to);
    }
    std::optional<std::size_t> first;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        if (!active.node[k]) continue;
        if (!first) first = root(k);
        else if (root(k) != *first) return false;
    }
    return true;
}

CouplingMap build_coupling(const MicrogridGraph& g, const ActiveSet& active) {
    if (active.node.size() != g.nodes.size() || active.line.size() != g.lines.size() ||
        active.dgu.size() != g.dgus.size()) {
        throw DimensionError("active set does not match the graph");
    }
    CouplingMap m;
    m.node_offset.assign(g.nodes.size(), -1);
    m.line_offset.assign(g.lines.size(), -1);
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        if (active.node[k]) {
            m.node_offset[k] = m.dim;
            m.dim += 2;
        }
    }
    for (std::size_t l = 0; l < g.lines.size(); ++l) {
        if (!active.line[l]) continue;
        const auto& line = g.lines[l];
        if (!active.node[line.from] || !active.node[line.to]) {
            throw ValidationError("dangling line '" + line.id + "': an endpoint node is inactive");
        }
        m.line_offset[l] = m.dim;
        m.dim += 4;
    }

    std::vector<Eigen::Triplet<double>> t;
    t.reserve(16 * g.lines.size());
    for (std::size_t l = 0; l < g.lines.size(); ++l) {
        if (m.line_offset[l] < 0) continue;
        const int lo = m.line_offset[l];
        const int a = m.node_offset[g.lines[l].from];
        const int b = m.node_offset[g.lines[l].to];
        for (int c = 0; c < 2; ++c) {
            // z_l = [I; -I]. Source node takes -I, sink node +I.
            t.emplace_back(a + c, lo + c, -1.0);
            t.emplace_back(b + c, lo + 2 + c, -1.0);
            // d_l = [V_from; V_to].
            t.emplace_back(lo + c, a + c, 1.0);
            t.emplace_back(lo + 2 + c, b + c, 1.0);
        }
    }
    m.phi.resize(m.dim, m.dim);
    m.phi.setFromTriplets(t.begin(), t.end());
    m.phi.makeCompressed();
    return m;
}

Vec coupling_inputs(const CouplingMap& map, const Vec& z) {
    if (z.size() != map.dim) throw DimensionError("coupling_inputs: z has the wrong size");
    return map.phi * z;
}

TopologyUpdate apply_topology_event(const MicrogridGraph& g, const ActiveSet& active, const TopologyEvent& ev) {
    if (ev.dgu >= g.dgus.size()) throw ValidationError("topology event targets a missing DGU");
    const bool plug_in = ev.action == TopologyAction::plug_in;
    if (active.dgu.at(ev.dgu) == plug_in) {
        throw ValidationError("DGU '" + g.dgus[ev.dgu].id + (plug_in ? "' is already connected" : "' is already disconnected"));
    }
    TopologyUpdate up{active, {}};
    up.active.dgu[ev.dgu] = plug_in;
    if (!weakly_connected(g, up.active)) throw ValidationError("active grid is not weakly connected");
    up.coupling = build_coupling(g, up.active);
    return up;
}

}  // namespace phmg
