#include "phmg/cli.hpp"

#include "phmg/kernels.hpp"
#include "phmg/report.hpp"
#include "phmg/scenario.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace phmg {

namespace {

struct SimulateOpts {
    std::string scenario;
    std::string out = "out";
    std::string method;
    double h = 0.0;
    double horizon = 0.0;
    bool parallel = false;
};

struct EipOpts {
    std::string scenario;
    double vmin = 0.0;
    double vmax = 0.0;
    int points = 101;
    std::size_t probe = 10000;
    std::uint64_t seed = 1;
};

struct EquilibriumOpts {
    std::string scenario;
    double at = 0.0;
};

struct PlotOpts {
    std::string csv;
    std::string out = "plots";
    double band = 2.0;
};

int simulate(const SimulateOpts& o) {
    Scenario sc = load_scenario(o.scenario);
    if (!o.method.empty()) sc.solver.method = o.method == "rk4" ? Method::rk4 : Method::trapezoidal;
    if (o.h > 0.0) {
        sc.solver.h = o.h;
        sc.solver.h_min = std::min(sc.solver.h_min, o.h);
        // Keep the logging interval near 1 ms.
        sc.solver.log_every = std::max(1, static_cast<int>(std::lround(1e-3 / o.h)));
    }
    if (o.horizon > 0.0) {
        sc.horizon = o.horizon;
        std::erase_if(sc.events, [&](const Event& e) { return e.t >= sc.horizon; });
    }
    if (o.parallel) sc.solver.exec = Exec::parallel;

    const auto start = std::chrono::steady_clock::now();
    const Trajectory traj = integrate(sc);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const SettlingReport rep = settling_metrics(traj, sc.band);
    const auto lyap = lyapunov_verdicts(traj);
    std::filesystem::create_directories(o.out);
    const std::filesystem::path dir(o.out);
    {
        std::ofstream f(dir / "trajectory.csv");
        if (!f) throw ValidationError("cannot write " + (dir / "trajectory.csv").string());
        write_csv(f, traj);
    }
    std::ofstream(dir / "metrics.json") << metrics_json(traj, rep, lyap) << '\n';
    const std::string text = metrics_text(traj, rep, lyap);
    std::ofstream(dir / "metrics.txt") << text;
    std::cout << "scenario " << sc.name << ", horizon " << sc.horizon << " s, " << to_string(sc.solver.method)
              << " h=" << sc.solver.h << " s, wall " << wall << " s\n"
              << text << "wrote " << (dir / "trajectory.csv").string() << ", metrics.json, metrics.txt\n";
    return 0;
}

int check_eip(const EipOpts& o) {
    const Scenario sc = load_scenario(o.scenario);
    const auto& g = *sc.graph;
    const AmplitudeRange range{o.vmin > 0.0 ? o.vmin : 0.9 * g.V0, o.vmax > 0.0 ? o.vmax : 1.1 * g.V0};
    const AmplitudeGrid grid{range, o.points};
    std::printf("amplitude range [%g, %g] V, %d grid points, %zu probe pairs\n", range.lo, range.hi, o.points, o.probe);
    std::printf("%-6s %-5s %-4s %-13s %12s %12s %12s %10s\n", "load", "node", "kind", "class", "v_hat_V", "margin",
                "probe_min", "probe_bad");
    bool all = true;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const LoadModel* l = g.load_at(k);
        if (!l) continue;
        const auto i = g.dgu_at(k);
        const std::string id = i ? g.dgus[*i].load_id : g.nodes[k].load_id;
        const EipVerdict v = check_load_eip(*l, grid);
        ProbeSummary p;
        if (o.probe > 0) p = probe_pairs_parallel(*l, range, o.probe, o.seed);
        const bool ok = v.cls == EipClass::strictly_eip && (o.probe == 0 || p.nonpositive == 0);
        all = all && ok;
        std::printf("%-6s %-5s %-4s %-13s %12.2f %12.4e %12.4e %10zu\n", id.c_str(), g.nodes[k].id.c_str(),
                    l->is_zip() ? "zip" : "exp", to_string(v.cls), v.witness.v_hat, v.witness.margin, p.min_value,
                    p.nonpositive);
    }
    std::printf("%s\n", all ? "all loads certified" : "some loads are not certified");
    return all ? 0 : static_cast<int>(ErrorCategory::certification);
}

int equilibrium(const EquilibriumOpts& o) {
    const Scenario sc = load_scenario(o.scenario);
    const auto& g = *sc.graph;
    SimState st;
    st.cfg = ModelConfig::from_graph(g, sc.initial_active);
    st.x = Vec::Zero(StateLayout::make(g).size);
    for (const auto& e : sc.events) {
        if (e.t <= o.at) st = apply_event(g, std::move(st), e);
    }
    const NetworkModel m(sc.graph, st.cfg);
    const auto start = std::chrono::steady_clock::now();
    const NetworkEquilibrium eq = solve_equilibrium(m);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("equilibrium at t=%g s: %d Newton iterations, scaled residual %.3e, %.3f s\n", o.at, eq.iterations,
                eq.residual, wall);
    std::printf("%-6s %16s %16s %14s %14s\n", "node", "Vd_V", "Vq_V", "err_d_V", "err_q_V");
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const Vec2 V = m.node_voltage(eq.x, k);
        const auto i = g.dgu_at(k);
        if (i && st.cfg.active.dgu[*i]) {
            const Vec2 e = V - st.cfg.refs[*i].vec();
            std::printf("%-6s %16.9f %16.9f %14.3e %14.3e\n", g.nodes[k].id.c_str(), V[0], V[1], e[0], e[1]);
        } else {
            std::printf("%-6s %16.9f %16.9f %14s %14s\n", g.nodes[k].id.c_str(), V[0], V[1], "-", "-");
        }
    }
    std::printf("%-6s %16s %16s\n", "dgu", "Itd_A", "Itq_A");
    for (std::size_t i = 0; i < g.dgus.size(); ++i) {
        if (!st.cfg.active.dgu[i]) {
            std::printf("%-6s %16s\n", g.dgus[i].id.c_str(), "disconnected");
            continue;
        }
        const Vec2 I = m.dgu_current(eq.x, i);
        std::printf("%-6s %16.9f %16.9f\n", g.dgus[i].id.c_str(), I[0], I[1]);
    }
    std::printf("max reference error %.3e V\n", eq.max_reference_error);
    return 0;
}

int plot(const PlotOpts& o) {
    std::ifstream in(o.csv);
    if (!in) throw ValidationError("cannot open '" + o.csv + "'");
    const CsvTable t = read_csv(in);
    for (const auto& p : write_plots(t, o.out, o.band)) std::cout << "wrote " << p << '\n';
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Port-Hamiltonian islanded microgrid simulator and certifier"};
    app.require_subcommand(1);

    SimulateOpts so;
    auto* sim = app.add_subcommand("simulate", "Integrate a scenario; write trajectory CSV and metrics");
    sim->add_option("scenario", so.scenario, "Preset name or JSON file")->required();
    sim->add_option("--out", so.out, "Output directory");
    sim->add_option("--method", so.method, "Override the integration method")->check(CLI::IsMember({"trapezoidal", "rk4"}));
    sim->add_option("--step", so.h, "Override the step size in seconds")->check(CLI::PositiveNumber);
    sim->add_option("--horizon", so.horizon, "Override the horizon in seconds")->check(CLI::PositiveNumber);
    sim->add_flag("--parallel", so.parallel, "Evaluate subsystems with OpenMP");

    EipOpts eo;
    auto* eip = app.add_subcommand("check-eip", "Certify every load over an amplitude interval");
    eip->add_option("scenario", eo.scenario, "Preset name or JSON file")->required();
    eip->add_option("--vmin", eo.vmin, "Lower amplitude in volts (default 0.9 V0)")->check(CLI::PositiveNumber);
    eip->add_option("--vmax", eo.vmax, "Upper amplitude in volts (default 1.1 V0)")->check(CLI::PositiveNumber);
    eip->add_option("--points", eo.points, "Amplitude grid points")->check(CLI::Range(2, 1000000));
    eip->add_option("--probe", eo.probe, "Random voltage pairs for the monotonicity probe (0 disables)");
    eip->add_option("--seed", eo.seed, "Probe seed");

    EquilibriumOpts qo;
    auto* equ = app.add_subcommand("equilibrium", "Newton-solve the equilibrium of the configuration at a time");
    equ->add_option("scenario", qo.scenario, "Preset name or JSON file")->required();
    equ->add_option("--at", qo.at, "Time in seconds; events at or before it are applied")->check(CLI::NonNegativeNumber);

    PlotOpts po;
    auto* plt = app.add_subcommand("plot", "Render voltage and error charts from a trajectory CSV");
    plt->add_option("csv", po.csv, "Trajectory CSV")->required();
    plt->add_option("--out", po.out, "Output directory");
    plt->add_option("--band", po.band, "Settling band in volts for the zoomed chart")->check(CLI::PositiveNumber);

    std::string export_name;
    auto* exp = app.add_subcommand("export", "Print the canonical JSON of a scenario");
    exp->add_option("scenario", export_name, "Preset name or JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ErrorCategory::validation);
    }

    try {
        if (*sim) return simulate(so);
        if (*eip) return check_eip(eo);
        if (*equ) return equilibrium(qo);
        if (*plt) return plot(po);
        if (*exp) {
            std::cout << dump_scenario(load_scenario(export_name)) << '\n';
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error category=" << category_name(e.category()) << " message=\"" << e.what() << "\"\n";
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error category=validation message=\"" << e.what() << "\"\n";
        return static_cast<int>(ErrorCategory::validation);
    }
    return 0;
}

}  // namespace phmg
