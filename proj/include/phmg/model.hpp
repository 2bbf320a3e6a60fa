#pragma once

#include "phmg/network.hpp"
#include "phmg/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace phmg {

enum class Exec { serial, parallel };

// Parameters that events may change between integration segments.
struct ModelConfig {
    ActiveSet active;
    std::vector<double> load_scale;  // per node, cumulative
    std::vector<VoltageReference> refs;  // per DGU

    static ModelConfig from_graph(const MicrogridGraph& g, ActiveSet active);
    bool operator==(const ModelConfig&) const = default;
};

// Offsets into the stacked state. Every subsystem owns its slots whether active or not.
struct StateLayout {
    std::vector<int> node;      // [C V_d, C V_q]
    std::vector<int> dgu_flux;  // [L I_d, L I_q]
    std::vector<int> dgu_ctrl;  // integrator pair
    std::vector<int> line;      // [L I_d, L I_q]
    int size = 0;

    static StateLayout make(const MicrogridGraph& g);
};

struct DguCommand {
    Vec2 raw = Vec2::Zero();
    Vec2 applied = Vec2::Zero();
    bool saturated = false;
};

struct Evaluation {
    Vec dx;
    Vec z;
    Vec d;
    std::vector<DguCommand> u;
};

// Plant energy bookkeeping at one state, in watts.
struct PowerBalance {
    double dHdt = 0.0;         // sum over plants of costate^T x'
    double dissipation = 0.0;  // resistive losses plus load consumption
    double control = 0.0;      // sum of y^T u over connected DGUs
    double coupling = 0.0;     // sum of z^T d; zero for a skew coupling
    double magnitude = 0.0;    // sum of absolute values of all terms
};

class NetworkModel {
public:
    NetworkModel(std::shared_ptr<const MicrogridGraph> graph, ModelConfig cfg);

    const MicrogridGraph& graph() const { return *graph_; }
    std::shared_ptr<const MicrogridGraph> graph_ptr() const { return graph_; }
    const ModelConfig& config() const { return cfg_; }
    const StateLayout& layout() const { return layout_; }
    const CouplingMap& coupling() const { return coupling_; }
    int size() const { return layout_.size; }

    // Plant capacitance at a node: filter C_t for DGU nodes plus the line legs.
    double node_capacitance(std::size_t k) const { return node_C_[k]; }
    const std::optional<LoadModel>& node_load(std::size_t k) const { return loads_[k]; }
    const DguParams& nominal(std::size_t i) const { return graph_->dgus[i].plant; }

    Vec2 node_voltage(const Vec& x, std::size_t k) const;
    Vec2 dgu_current(const Vec& x, std::size_t i) const;
    Vec2 line_current(const Vec& x, std::size_t l) const;
    Vec2 controller_state(const Vec& x, std::size_t i) const;

    void derivative(const Vec& x, Vec& dx, Exec exec = Exec::serial) const;
    Vec derivative(const Vec& x) const;
    Evaluation evaluate(const Vec& x) const;
    Vec outputs(const Vec& x) const;
    PowerBalance power_balance(const Vec& x) const;

    // Indices of states that evolve under the current active set.
    const std::vector<int>& free_states() const { return free_; }
    // Magnitudes for step sizes and convergence tests, per state.
    Vec state_scales() const;
    // Magnitudes the residual rows are measured against, per state.
    Vec residual_scales() const;

    // Fluxes zero, node voltages (V0, 0), integrators zero.
    Vec default_initial_state() const;
    std::vector<std::string> state_names() const;

private:
    struct LineBlock {
        Mat2 A;
        double L;
    };

    DguCommand command(std::size_t i, const Vec2& I, const Vec2& V, const Vec2& s) const;
    void node_derivative(std::size_t k, const Vec& x, const Vec& d, Vec& dx, DguCommand* cmd) const;
    void fill_outputs(const Vec& x, Vec& z) const;

    std::shared_ptr<const MicrogridGraph> graph_;
    ModelConfig cfg_;
    StateLayout layout_;
    CouplingMap coupling_;
    std::vector<double> node_C_;
    std::vector<std::optional<LoadModel>> loads_;
    std::vector<Mat4> dgu_A_;   // (J - R) Q with the plant capacitance
    std::vector<Mat2> node_A_;  // J Q of the bare node capacitor
    std::vector<LineBlock> lines_;
    std::vector<int> free_;
};

using VectorField = std::function<Vec(double, const Vec&)>;

// Closed-loop vector field of the whole grid under one configuration.
VectorField assemble_vector_field(std::shared_ptr<const MicrogridGraph> graph, const ModelConfig& cfg);

}  // namespace phmg
