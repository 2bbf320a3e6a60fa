#include "phmg/model.hpp"

#include <exception>
#include <mutex>

namespace phmg {

ModelConfig ModelConfig::from_graph(const MicrogridGraph& g, ActiveSet active) {
    ModelConfig c;
    c.active = std::move(active);
    c.load_scale.assign(g.nodes.size(), 1.0);
    for (const auto& d : g.dgus) c.refs.push_back(d.ctrl.ref);
    return c;
}

StateLayout StateLayout::make(const MicrogridGraph& g) {
    StateLayout s;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        s.node.push_back(s.size);
        s.size += 2;
    }
    for (std::size_t i = 0; i < g.dgus.size(); ++i) {
        s.dgu_flux.push_back(s.size);
        s.dgu_ctrl.push_back(s.size + 2);
        s.size += 4;
    }
    for (std::size_t l = 0; l < g.lines.size(); ++l) {
        s.line.push_back(s.size);
        s.size += 2;
    }
    return s;
}

NetworkModel::NetworkModel(std::shared_ptr<const MicrogridGraph> graph, ModelConfig cfg)
    : graph_(std::move(graph)), cfg_(std::move(cfg)) {
    const auto& g = *graph_;
    if (cfg_.load_scale.size() != g.nodes.size() || cfg_.refs.size() != g.dgus.size()) {
        throw DimensionError("model configuration does not match the graph");
    }
    layout_ = StateLayout::make(g);
    coupling_ = build_coupling(g, cfg_.active);

    const auto legs = effective_capacitances(g);
    node_C_.resize(g.nodes.size());
    loads_.resize(g.nodes.size());
    node_A_.resize(g.nodes.size());
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const auto i = g.dgu_at(k);
        node_C_[k] = i ? g.dgus[*i].plant.Ct + legs[k] : legs[k];
        if (const LoadModel* l = g.load_at(k)) loads_[k] = l->scaled(cfg_.load_scale[k]);
        const auto phs = build_load_node_phs(node_C_[k], g.omega0);
        node_A_[k] = (phs.J * phs.Q).eval();
    }
    for (std::size_t i = 0; i < g.dgus.size(); ++i) {
        DguParams plant = g.dgus[i].plant;
        plant.Ct = node_C_[g.dgus[i].node];
        const auto phs = build_dgu_phs(plant);
        dgu_A_.push_back(((phs.J - phs.R) * phs.Q).eval());
    }
    for (const auto& line : g.lines) {
        const auto phs = build_line_phs(line.params, g.omega0);
        lines_.push_back({((phs.J - phs.R) * phs.Q).eval(), line.params.inductance()});
    }

    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        if (!cfg_.active.node[k]) continue;
        free_.push_back(layout_.node[k]);
        free_.push_back(layout_.node[k] + 1);
        if (const auto i = g.dgu_at(k); i && cfg_.active.dgu[*i]) {
            free_.push_back(layout_.dgu_flux[*i]);
            free_.push_back(layout_.dgu_flux[*i] + 1);
            if (g.dgus[*i].ctrl.kind != ControllerKind::none) {
                free_.push_back(layout_.dgu_ctrl[*i]);
                free_.push_back(layout_.dgu_ctrl[*i] + 1);
            }
        }
    }
    for (std::size_t l = 0; l < g.lines.size(); ++l) {
        if (!cfg_.active.line[l]) continue;
        free_.push_back(layout_.line[l]);
        free_.push_back(layout_.line[l] + 1);
    }
    std::sort(free_.begin(), free_.end());
}

Vec2 NetworkModel::node_voltage(const Vec& x, std::size_t k) const {
    return x.segment<2>(layout_.node[k]) / node_C_[k];
}

Vec2 NetworkModel::dgu_current(const Vec& x, std::size_t i) const {
    return x.segment<2>(layout_.dgu_flux[i]) / graph_->dgus[i].plant.Lt;
}

Vec2 NetworkModel::line_current(const Vec& x, std::size_t l) const {
    return x.segment<2>(layout_.line[l]) / lines_[l].L;
}

Vec2 NetworkModel::controller_state(const Vec& x, std::size_t i) const {
    return x.segment<2>(layout_.dgu_ctrl[i]);
}

DguCommand NetworkModel::command(std::size_t i, const Vec2& I, const Vec2& V, const Vec2& s) const {
    const auto& dgu = graph_->dgus[i];
    const auto& ref = cfg_.refs[i];
    DguCommand c;
    switch (dgu.ctrl.kind) {
    case ControllerKind::ida_pbc:
        c.raw = ida_pbc_output(dgu.ctrl.ida, dgu.plant, DguMeasurement{I, V}, ref, ControllerState{s});
        break;
    case ControllerKind::pi:
        c.raw = pi_output(dgu.ctrl.pi, DguMeasurement{I, V}, ControllerState{s});
        break;
    case ControllerKind::none:
        c.raw = ref.vec();
        break;
    }
    if (dgu.ctrl.sat) {
        const auto s2 = saturate(c.raw, *dgu.ctrl.sat);
        c.applied = s2.u;
        c.saturated = s2.saturated;
    } else {
        c.applied = c.raw;
    }
    return c;
}

void NetworkModel::fill_outputs(const Vec& x, Vec& z) const {
    z.resize(coupling_.dim);
    for (std::size_t k = 0; k < node_C_.size(); ++k) {
        const int o = coupling_.node_offset[k];
        if (o >= 0) z.segment<2>(o) = node_voltage(x, k);
    }
    for (std::size_t l = 0; l < lines_.size(); ++l) {
        const int o = coupling_.line_offset[l];
        if (o < 0) continue;
        const Vec2 I = line_current(x, l);
        z.segment<2>(o) = I;
        z.segment<2>(o + 2) = -I;
    }
}

Vec NetworkModel::outputs(const Vec& x) const {
    Vec z;
    fill_outputs(x, z);
    return z;
}

void NetworkModel::node_derivative(std::size_t k, const Vec& x, const Vec& d, Vec& dx, DguCommand* cmd) const {
    const int n = layout_.node[k];
    const int o = coupling_.node_offset[k];
    const auto i = graph_->dgu_at(k);
    if (o < 0) {
        dx.segment<2>(n).setZero();
        if (i) dx.segment<4>(layout_.dgu_flux[*i]).setZero();
        return;
    }
    const Vec2 V = node_voltage(x, k);
    Vec2 sink = -d.segment<2>(o);
    if (loads_[k]) sink += load_current(*loads_[k], V);

    if (i && cfg_.active.dgu[*i]) {
        const int f = layout_.dgu_flux[*i];
        const int c = layout_.dgu_ctrl[*i];
        Vec4 xi;
        xi << x.segment<2>(f), x.segment<2>(n);
        const Vec2 I = xi.head<2>() / graph_->dgus[*i].plant.Lt;
        const DguCommand u = command(*i, I, V, x.segment<2>(c));
        Vec4 dxi = dgu_A_[*i] * xi;
        dxi.head<2>() += u.applied;
        dxi.tail<2>() -= sink;
        dx.segment<2>(f) = dxi.head<2>();
        dx.segment<2>(n) = dxi.tail<2>();
        switch (graph_->dgus[*i].ctrl.kind) {
        case ControllerKind::ida_pbc: dx.segment<2>(c) = ida_integrator_derivative(V, cfg_.refs[*i]); break;
        case ControllerKind::pi: dx.segment<2>(c) = pi_integrator_derivative(cfg_.refs[*i], V); break;
        case ControllerKind::none: dx.segment<2>(c).setZero(); break;
        }
        if (cmd) *cmd = u;
    } else {
        dx.segment<2>(n) = node_A_[k] * x.segment<2>(n) - sink;
        if (i) dx.segment<4>(layout_.dgu_flux[*i]).setZero();
    }
}

void NetworkModel::derivative(const Vec& x, Vec& dx, Exec exec) const {
    if (x.size() != layout_.size) throw DimensionError("state vector has the wrong size");
    dx.resize(layout_.size);
    Vec z;
    fill_outputs(x, z);
    const Vec d = coupling_.phi * z;

    const long nn = static_cast<long>(node_C_.size());
    const long nl = static_cast<long>(lines_.size());
    const bool par = exec == Exec::parallel;
    std::exception_ptr failure;
    std::mutex failure_mutex;

#pragma omp parallel if (par)
    {
#pragma omp for schedule(static) nowait
        for (long k = 0; k < nn; ++k) {
            try {
                node_derivative(static_cast<std::size_t>(k), x, d, dx, nullptr);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
#pragma omp for schedule(static)
        for (long l = 0; l < nl; ++l) {
            const int s = layout_.line[l];
            const int o = coupling_.line_offset[l];
            if (o < 0) {
                dx.segment<2>(s).setZero();
                continue;
            }
            dx.segment<2>(s) = lines_[l].A * x.segment<2>(s) + d.segment<2>(o) - d.segment<2>(o + 2);
        }
    }
    if (failure) std::rethrow_exception(failure);
}

Vec NetworkModel::derivative(const Vec& x) const {
    Vec dx;
    derivative(x, dx);
    return dx;
}

Evaluation NetworkModel::evaluate(const Vec& x) const {
    Evaluation e;
    e.dx.resize(layout_.size);
    fill_outputs(x, e.z);
    e.d = coupling_.phi * e.z;
    e.u.resize(graph_->dgus.size());
    for (std::size_t k = 0; k < node_C_.size(); ++k) {
        DguCommand cmd;
        node_derivative(k, x, e.d, e.dx, &cmd);
        if (const auto i = graph_->dgu_at(k)) e.u[*i] = cmd;
    }
    for (std::size_t l = 0; l < lines_.size(); ++l) {
        const int s = layout_.line[l];
        const int o = coupling_.line_offset[l];
        e.dx.segment<2>(s) = o < 0 ? Vec2::Zero().eval()
                                   : (lines_[l].A * x.segment<2>(s) + e.d.segment<2>(o) - e.d.segment<2>(o + 2)).eval();
    }
    return e;
}

PowerBalance NetworkModel::power_balance(const Vec& x) const {
    const auto& g = *graph_;
    const Evaluation e = evaluate(x);
    PowerBalance p;
    auto add = [&p](double& slot, double v) {
        slot += v;
        p.magnitude += std::abs(v);
    };
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const int o = coupling_.node_offset[k];
        if (o < 0) continue;
        const Vec2 V = node_voltage(x, k);
        add(p.dHdt, V.dot(e.dx.segment<2>(layout_.node[k])));
        add(p.coupling, V.dot(e.d.segment<2>(o)));
        if (loads_[k]) add(p.dissipation, V.dot(load_current(*loads_[k], V)));
        if (const auto i = g.dgu_at(k); i && cfg_.active.dgu[*i]) {
            const Vec2 I = dgu_current(x, *i);
            add(p.dHdt, I.dot(e.dx.segment<2>(layout_.dgu_flux[*i])));
            add(p.dissipation, g.dgus[*i].plant.Rt * I.squaredNorm());
            add(p.control, I.dot(e.u[*i].applied));
        }
    }
    for (std::size_t l = 0; l < g.lines.size(); ++l) {
        const int o = coupling_.line_offset[l];
        if (o < 0) continue;
        const Vec2 I = line_current(x, l);
        add(p.dHdt, I.dot(e.dx.segment<2>(layout_.line[l])));
        add(p.dissipation, g.lines[l].params.resistance() * I.squaredNorm());
        add(p.coupling, e.z.segment<4>(o).dot(e.d.segment<4>(o)));
    }
    return p;
}

Vec NetworkModel::state_scales() const {
    const auto& g = *graph_;
    const double i_base = g.dgus.empty() ? 100.0 : g.omega0 * g.dgus.front().plant.Ct * g.V0;
    Vec s = Vec::Ones(layout_.size);
    for (std::size_t k = 0; k < g.nodes.size(); ++k) s.segment<2>(layout_.node[k]).setConstant(node_C_[k] * g.V0);
    for (std::size_t i = 0; i < g.dgus.size(); ++i) {
        s.segment<2>(layout_.dgu_flux[i]).setConstant(g.dgus[i].plant.Lt * i_base);
        s.segment<2>(layout_.dgu_ctrl[i]).setConstant(1.0);
    }
    for (std::size_t l = 0; l < g.lines.size(); ++l) s.segment<2>(layout_.line[l]).setConstant(lines_[l].L * i_base);
    return s;
}

Vec NetworkModel::residual_scales() const {
    const auto& g = *graph_;
    Vec s = Vec::Constant(layout_.size, g.V0);
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        s.segment<2>(layout_.node[k]).setConstant(g.omega0 * node_C_[k] * g.V0);
    }
    return s;
}

Vec NetworkModel::default_initial_state() const {
    Vec x = Vec::Zero(layout_.size);
    for (std::size_t k = 0; k < node_C_.size(); ++k) x[layout_.node[k]] = node_C_[k] * graph_->V0;
    return x;
}

std::vector<std::string> NetworkModel::state_names() const {
    const auto& g = *graph_;
    std::vector<std::string> names(layout_.size);
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        names[layout_.node[k]] = g.nodes[k].id + ".qd";
        names[layout_.node[k] + 1] = g.nodes[k].id + ".qq";
    }
    for (std::size_t i = 0; i < g.dgus.size(); ++i) {
        names[layout_.dgu_flux[i]] = g.dgus[i].id + ".phid";
        names[layout_.dgu_flux[i] + 1] = g.dgus[i].id + ".phiq";
        names[layout_.dgu_ctrl[i]] = g.dgus[i].id + ".intd";
        names[layout_.dgu_ctrl[i] + 1] = g.dgus[i].id + ".intq";
    }
    for (std::size_t l = 0; l < g.lines.size(); ++l) {
        names[layout_.line[l]] = g.lines[l].id + ".phid";
        names[layout_.line[l] + 1] = g.lines[l].id + ".phiq";
    }
    return names;
}

VectorField assemble_vector_field(std::shared_ptr<const MicrogridGraph> graph, const ModelConfig& cfg) {
    auto model = std::make_shared<const NetworkModel>(std::move(graph), cfg);
    return [model](double, const Vec& x) { return model->derivative(x); };
}

}  // namespace phmg
