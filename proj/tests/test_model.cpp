#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "phmg/eip.hpp"
#include "phmg/model.hpp"

#include <random>

using namespace phmg;
using namespace phmg::test;
using Catch::Approx;

namespace {

Vec2 rot(const Vec2& v) { return {v[1], -v[0]}; }

// Random state around the operating point: voltages near V0, currents of a few hundred amperes.
Vec random_state(const NetworkModel& m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto& g = m.graph();
    const auto& lay = m.layout();
    Vec x = Vec::Zero(m.size());
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        x.segment<2>(lay.node[k]) = m.node_capacitance(k) * Vec2(16000.0 + 3000.0 * u(rng), 9000.0 + 3000.0 * u(rng));
    }
    for (std::size_t i = 0; i < g.dgus.size(); ++i) {
        x.segment<2>(lay.dgu_flux[i]) = g.dgus[i].plant.Lt * Vec2(300.0 * u(rng), 300.0 * u(rng));
        x.segment<2>(lay.dgu_ctrl[i]) = Vec2(u(rng), u(rng));
    }
    for (std::size_t l = 0; l < g.lines.size(); ++l) {
        x.segment<2>(lay.line[l]) = g.lines[l].params.inductance() * Vec2(100.0 * u(rng), 100.0 * u(rng));
    }
    return x;
}

// Circuit equations written per element, independent of the port-Hamiltonian assembly.
Vec oracle_derivative(const NetworkModel& m, const Vec& x, const std::vector<DguCommand>& u) {
    const auto& g = m.graph();
    const auto& cfg = m.config();
    const auto& lay = m.layout();
    const double w = g.omega0;
    Vec dx = Vec::Zero(m.size());
    std::vector<Vec2> inflow(g.nodes.size(), Vec2::Zero());
    for (std::size_t l = 0; l < g.lines.size(); ++l) {
        if (!cfg.active.line[l]) continue;
        const auto& line = g.lines[l];
        const Vec2 I = m.line_current(x, l);
        const double L = line.params.inductance(), R = line.params.resistance();
        dx.segment<2>(lay.line[l]) = -R * I + w * L * rot(I) + m.node_voltage(x, line.from) - m.node_voltage(x, line.to);
        inflow[line.from] -= I;
        inflow[line.to] += I;
    }
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const Vec2 V = m.node_voltage(x, k);
        const double C = m.node_capacitance(k);
        Vec2 q = w * C * rot(V) + inflow[k];
        if (const auto& load = m.node_load(k)) q -= load_current(*load, V);
        const auto i = g.dgu_at(k);
        if (i && cfg.active.dgu[*i]) {
            const auto& p = g.dgus[*i].plant;
            const Vec2 I = m.dgu_current(x, *i);
            q += I;
            dx.segment<2>(lay.dgu_flux[*i]) = -p.Rt * I + w * p.Lt * rot(I) - V + u[*i].applied;
            const Vec2 e = V - cfg.refs[*i].vec();
            dx.segment<2>(lay.dgu_ctrl[*i]) = g.dgus[*i].ctrl.kind == ControllerKind::pi ? Vec2(-e) : e;
        }
        dx.segment<2>(lay.node[k]) = q;
    }
    return dx;
}

}  // namespace

TEST_CASE("state layout", "[model]") {
    const auto g = load_scenario("cigre-feeder1").graph;
    const StateLayout lay = StateLayout::make(*g);
    CHECK(lay.size == 2 * 11 + 4 * 6 + 2 * 12);
    CHECK(lay.node[0] == 0);
    CHECK(lay.dgu_flux[0] == 22);
    CHECK(lay.dgu_ctrl[0] == 24);
    CHECK(lay.line[0] == 46);
    const NetworkModel m(g, ModelConfig::from_graph(*g, ActiveSet::all(*g)));
    CHECK(m.state_names().size() == static_cast<std::size_t>(lay.size));
    CHECK(m.state_names()[22] == "DGU1.phid");
}

TEST_CASE("plant capacitances include the line legs", "[model]") {
    const auto g = load_scenario("cigre-feeder1").graph;
    const NetworkModel m(g, ModelConfig::from_graph(*g, ActiveSet::all(*g)));
    CHECK(m.node_capacitance(*g->find_node("3")) == Approx(25.159285e-6));
    CHECK(m.node_capacitance(*g->find_node("7")) == Approx(546.12e-9));
    // The controller keeps the nominal filter value.
    CHECK(m.nominal(*g->find_dgu("DGU3")).Ct == 25e-6);
}

TEST_CASE("assembled field matches the element equations", "[model][property]") {
    const auto g = load_scenario("cigre-feeder1").graph;
    ActiveSet a = ActiveSet::all(*g);
    a.dgu[*g->find_dgu("DGU5")] = false;
    std::mt19937_64 rng(31);
    for (const ActiveSet& act : {ActiveSet::all(*g), a}) {
        const NetworkModel m(g, ModelConfig::from_graph(*g, act));
        for (int k = 0; k < 20; ++k) {
            const Vec x = random_state(m, rng);
            const Evaluation e = m.evaluate(x);
            const Vec want = oracle_derivative(m, x, e.u);
            const Vec rs = m.residual_scales();
            CHECK(((e.dx - want).cwiseQuotient(rs)).lpNorm<Eigen::Infinity>() < 1e-9);
            CHECK(e.dx == m.derivative(x));
        }
    }
}

TEST_CASE("disconnected DGU states are frozen", "[model]") {
    const auto g = load_scenario("cigre-feeder1").graph;
    const NetworkModel m(g, ModelConfig::from_graph(*g, ActiveSet{std::vector<bool>(11, true), std::vector<bool>(12, true),
                                                                   {true, true, true, true, false, true}}));
    std::mt19937_64 rng(37);
    const Vec x = random_state(m, rng);
    const Vec dx = m.derivative(x);
    const int f = m.layout().dgu_flux[4];
    CHECK(dx.segment<4>(f).norm() == 0.0);
    CHECK(std::find(m.free_states().begin(), m.free_states().end(), f) == m.free_states().end());
    CHECK(m.free_states().size() == static_cast<std::size_t>(m.size() - 4));
}

TEST_CASE("power balance identity", "[model][property]") {
    const auto g = load_scenario("cigre-feeder1").graph;
    const NetworkModel m(g, ModelConfig::from_graph(*g, ActiveSet::all(*g)));
    std::mt19937_64 rng(41);
    for (int k = 0; k < 100; ++k) {
        const PowerBalance p = m.power_balance(random_state(m, rng));
        CHECK(std::abs(p.coupling) <= 1e-9 * p.magnitude);
        CHECK(std::abs(p.dHdt - (-p.dissipation + p.control + p.coupling)) <= 1e-9 * p.magnitude);
    }
}

TEST_CASE("serial and parallel evaluation agree exactly", "[model]") {
    const auto g = load_scenario("cigre-feeder1").graph;
    const NetworkModel m(g, ModelConfig::from_graph(*g, ActiveSet::all(*g)));
    std::mt19937_64 rng(43);
    for (int k = 0; k < 10; ++k) {
        const Vec x = random_state(m, rng);
        Vec a, b;
        m.derivative(x, a, Exec::serial);
        m.derivative(x, b, Exec::parallel);
        CHECK(a == b);
    }
}

TEST_CASE("default initial state", "[model]") {
    const auto g = load_scenario("cigre-feeder1").graph;
    const NetworkModel m(g, ModelConfig::from_graph(*g, ActiveSet::all(*g)));
    const Vec x = m.default_initial_state();
    for (std::size_t k = 0; k < g->nodes.size(); ++k) CHECK(m.node_voltage(x, k).isApprox(Vec2(kV0, 0.0)));
    for (std::size_t i = 0; i < g->dgus.size(); ++i) {
        CHECK(m.dgu_current(x, i).norm() == 0.0);
        CHECK(m.controller_state(x, i).norm() == 0.0);
    }
}

TEST_CASE("vector field vanishes at the solved equilibrium", "[model]") {
    const auto g = mini_grid();
    const ModelConfig cfg = ModelConfig::from_graph(*g, ActiveSet::all(*g));
    const NetworkModel m(g, cfg);
    const NetworkEquilibrium eq = solve_equilibrium(m);
    const VectorField f = assemble_vector_field(g, cfg);
    const Vec dx = f(0.0, eq.x);
    CHECK((dx.cwiseQuotient(m.residual_scales())).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("line with equal end voltages only decays", "[model]") {
    const auto g = mini_grid();
    const NetworkModel m(g, ModelConfig::from_graph(*g, ActiveSet::all(*g)));
    Vec x = m.default_initial_state();
    const Vec2 I(3.0, -1.0);
    const double L = g->lines[0].params.inductance(), R = g->lines[0].params.resistance();
    x.segment<2>(m.layout().line[0]) = L * I;
    const Vec2 dphi = m.derivative(x).segment<2>(m.layout().line[0]);
    // 2x2 oracle: L dI/dt = (-R I_d + w L I_q, -R I_q - w L I_d).
    CHECK(dphi[0] == Approx(-R * 3.0 + kOmega0 * L * -1.0));
    CHECK(dphi[1] == Approx(-R * -1.0 - kOmega0 * L * 3.0));
    x.segment<2>(m.layout().line[0]).setZero();
    CHECK(m.derivative(x).segment<2>(m.layout().line[0]).norm() == 0.0);
}

TEST_CASE("applied commands respect saturation limits", "[model][property]") {
    auto g = std::make_shared<MicrogridGraph>(*mini_grid());
    for (auto& d : g->dgus) d.ctrl.sat = SaturationLimits{15000.0, 9000.0};
    const NetworkModel m(g, ModelConfig::from_graph(*g, ActiveSet::all(*g)));
    std::mt19937_64 rng(47);
    bool saw = false;
    for (int k = 0; k < 100; ++k) {
        const Evaluation e = m.evaluate(random_state(m, rng));
        for (const auto& u : e.u) {
            CHECK(std::abs(u.applied[0]) <= 15000.0);
            CHECK(std::abs(u.applied[1]) <= 9000.0);
            CHECK(u.saturated == (u.applied != u.raw));
            saw = saw || u.saturated;
        }
    }
    CHECK(saw);
}

TEST_CASE("domain exit raises a singular-voltage error", "[model]") {
    const auto g = mini_grid();
    const NetworkModel m(g, ModelConfig::from_graph(*g, ActiveSet::all(*g)));
    Vec x = m.default_initial_state();
    x.segment<2>(m.layout().node[1]).setZero();
    CHECK_THROWS_AS(m.derivative(x), SingularVoltageError);
    Vec dx;
    CHECK_THROWS_AS(m.derivative(x, dx, Exec::parallel), SingularVoltageError);
    CHECK_THROWS_AS(m.derivative(Vec::Zero(3)), DimensionError);
}
