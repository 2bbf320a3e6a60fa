#pragma once

#include "phmg/components.hpp"
#include "phmg/controllers.hpp"
#include "phmg/network.hpp"
#include "phmg/scenario.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace phmg::test {

inline constexpr double kOmega0 = 2.0 * std::numbers::pi * 50.0;
inline constexpr double kV0 = 20000.0;

inline DguParams filter() { return {0.1, 1.8e-3, 25e-6, kOmega0, std::nullopt}; }

inline LineParams cable(double km) { return {0.343, 0.875e-3, 151.7e-9, km, std::nullopt}; }

inline ZipParams zip(double Y, double I, double P) { return {Y, Y, I, I, P, P}; }

inline ZipParams load1() { return zip(75e-6, 0.3, 6000.0); }

inline ExpParams load9() { return {50900.0, 50900.0, 1.5, 1.5, kV0}; }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
    return v;
}

inline ControllerConfig ida_ctrl(VoltageReference ref) {
    ControllerConfig c;
    c.kind = ControllerKind::ida_pbc;
    c.ref = ref;
    return c;
}

inline ControllerConfig pi_ctrl(VoltageReference ref) {
    ControllerConfig c;
    c.kind = ControllerKind::pi;
    c.pi = pi_gains_from_tuning({1000.0, 1000.0, PiVoltageGain::passive}, filter());
    c.ref = ref;
    return c;
}

// One DGU on its own node, optionally with a local load.
inline std::shared_ptr<MicrogridGraph> single_dgu(ControllerConfig ctrl, std::optional<LoadModel> load = std::nullopt) {
    auto g = std::make_shared<MicrogridGraph>();
    g->V0 = kV0;
    g->omega0 = kOmega0;
    g->nodes.push_back(Node{"1", std::nullopt, ""});
    DguParams p = filter();
    p.local_load = load;
    g->dgus.push_back(Dgu{"D1", 0, p, ctrl, load ? "L1" : ""});
    g->validate();
    return g;
}

// IDA DGU at node 1 with load 1, lone ZIP node 2, PI DGU at node 3; lines 1->2 and 2->3.
inline std::shared_ptr<MicrogridGraph> mini_grid() {
    auto g = std::make_shared<MicrogridGraph>();
    g->V0 = kV0;
    g->omega0 = kOmega0;
    LoadModel lone{zip(80.8e-6, 0.323, 6464.0)};
    lone.C = 0.5 * (cable(1.3).capacitance() + cable(0.8).capacitance());
    g->nodes = {Node{"1", std::nullopt, ""}, Node{"2", lone, "L2"}, Node{"3", std::nullopt, ""}};
    DguParams p1 = filter();
    p1.local_load = LoadModel{load1()};
    g->dgus = {Dgu{"D1", 0, p1, ida_ctrl({18000.0, 11000.0}), "L1"},
               Dgu{"D3", 2, filter(), pi_ctrl({17000.0, 12000.0}), ""}};
    g->lines = {Line{"12", 0, 1, cable(1.3)}, Line{"23", 1, 2, cable(0.8)}};
    g->validate();
    return g;
}

inline Vec2 polar(double amp, double angle) { return {amp * std::cos(angle), amp * std::sin(angle)}; }

}  // namespace phmg::test
