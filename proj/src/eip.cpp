#include "phmg/eip.hpp"

#include "phmg/trajectory.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace phmg {

const char* to_string(EipClass c) {
    switch (c) {
    case EipClass::strictly_eip: return "StrictlyEIP";
    case EipClass::eip: return "EIP";
    case EipClass::not_certified: return "NotCertified";
    }
    return "?";
}

namespace {

std::vector<double> amplitudes(const AmplitudeGrid& g) {
    if (!(g.range.lo > 0.0) || !(g.range.hi >= g.range.lo)) {
        throw ValidationError("amplitude interval must satisfy 0 < lo <= hi");
    }
    if (g.points < 2) throw ValidationError("amplitude grid needs at least two points");
    std::vector<double> v;
    const double a = std::log(g.range.lo), b = std::log(g.range.hi);
    for (int i = 0; i < g.points; ++i) v.push_back(std::exp(a + (b - a) * i / (g.points - 1)));
    v.front() = g.range.lo;
    v.back() = g.range.hi;
    return v;
}

void check_amplitude(double v_hat) {
    if (!(v_hat > 0.0) || !std::isfinite(v_hat)) {
        std::ostringstream os;
        os << "amplitude must be positive, got " << v_hat;
        throw ValidationError(os.str());
    }
}

double relative_margin(double lhs, double rhs) {
    const double s = std::max(std::abs(lhs), std::abs(rhs));
    return s > 0.0 ? (lhs - rhs) / s : 0.0;
}

EipWitness zip_point(const ZipParams& p, double v) {
    EipWitness w;
    w.v_hat = v;
    w.a_lhs = p.Yp + p.Ip / (2.0 * v);
    w.b_lhs = p.Yp * p.Yp * std::pow(v, 4) + p.Yp * p.Ip * std::pow(v, 3);
    w.iq_term = 0.25 * p.Iq * v * v;
    w.iq_squared_term = 0.25 * p.Iq * p.Iq * v * v;
    w.b_rhs = w.iq_term + (p.Ip * p.Pp + p.Iq * p.Pq) * v + (p.Pp * p.Pp + p.Pq * p.Pq);
    w.margin = relative_margin(w.b_lhs, w.b_rhs);
    w.checked = 1;
    return w;
}

EipWitness exp_point(const ExpParams& p, double v) {
    EipWitness w;
    w.v_hat = v;
    const double r = v / p.V0;
    w.a_lhs = p.np * p.P0;
    w.b_lhs = 4.0 * (p.np - 1.0) * p.P0 * p.P0 * std::pow(r, 2.0 * p.np);
    w.b_rhs = (p.nq - 2.0) * (p.nq - 2.0) * p.Q0 * p.Q0 * std::pow(r, 2.0 * p.nq);
    w.margin = relative_margin(w.b_lhs, w.b_rhs);
    w.checked = 1;
    return w;
}

bool holds(const EipWitness& w) { return w.a_lhs > 0.0 && w.b_lhs > w.b_rhs; }

template <typename Fn>
EipVerdict over_grid(const AmplitudeGrid& grid, Fn point) {
    EipVerdict v;
    bool all = true;
    bool first = true;
    std::size_t n = 0;
    for (double a : amplitudes(grid)) {
        const EipWitness w = point(a);
        ++n;
        const bool ok = holds(w);
        all = all && ok;
        // Report the worst failing amplitude, or the tightest one when all pass.
        const bool worse = first || (!ok && holds(v.witness)) || (ok == holds(v.witness) && w.margin < v.witness.margin);
        if (worse) v.witness = w;
        first = false;
    }
    v.witness.checked = n;
    v.cls = all ? EipClass::strictly_eip : EipClass::not_certified;
    std::ostringstream os;
    os << n << " amplitudes in [" << grid.range.lo << ", " << grid.range.hi << "] V";
    if (!all) os << "; fails at " << v.witness.v_hat << " V";
    v.detail = os.str();
    return v;
}

}  // namespace

EipVerdict check_zip_eip(const ZipParams& p, double v_hat) {
    check_amplitude(v_hat);
    EipVerdict v;
    v.witness = zip_point(p, v_hat);
    v.cls = holds(v.witness) ? EipClass::strictly_eip : EipClass::not_certified;
    return v;
}

EipVerdict check_zip_eip(const ZipParams& p, const AmplitudeGrid& grid) {
    return over_grid(grid, [&](double a) { return zip_point(p, a); });
}

EipVerdict check_exp_eip(const ExpParams& p, double v_hat) {
    check_amplitude(v_hat);
    EipVerdict v;
    v.witness = exp_point(p, v_hat);
    v.cls = holds(v.witness) ? EipClass::strictly_eip : EipClass::not_certified;
    return v;
}

EipVerdict check_exp_eip(const ExpParams& p, const AmplitudeGrid& grid) {
    return over_grid(grid, [&](double a) { return exp_point(p, a); });
}

EipVerdict check_load_eip(const LoadModel& load, const AmplitudeGrid& grid) {
    return load.is_zip() ? check_zip_eip(load.zip(), grid) : check_exp_eip(load.exp(), grid);
}

double monotonicity_probe(const LoadModel& load, const Vec2& V1, const Vec2& V2) {
    return (V1 - V2).dot(load_current(load, V1) - load_current(load, V2));
}

EipVerdict lti_phs_eip_class(const LinearIsoPhs& phs) {
    const auto report = validate_phs(phs);
    if (!report.empty()) throw ValidationError("invalid port-Hamiltonian model: " + report.front().matrix + " " + report.front().detail);
    EipVerdict v;
    const Mat Rs = 0.5 * (phs.R + phs.R.transpose());
    const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(Rs, Eigen::EigenvaluesOnly).eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    v.witness.margin = ev.minCoeff();
    v.cls = (scale > 0.0 && ev.minCoeff() > kEigenTolerance * scale) ? EipClass::strictly_eip : EipClass::eip;
    v.detail = "smallest dissipation eigenvalue";
    return v;
}

Vec flat_start(const NetworkModel& m) {
    const auto& g = m.graph();
    const auto& cfg = m.config();
    Vec2 mean = Vec2::Zero();
    int count = 0;
    for (std::size_t i = 0; i < g.dgus.size(); ++i) {
        if (cfg.active.dgu[i]) {
            mean += cfg.refs[i].vec();
            ++count;
        }
    }
    mean = count > 0 ? Vec2(mean / count) : Vec2(g.V0, 0.0);
    Vec x = Vec::Zero(m.size());
    const auto& lay = m.layout();
    for (std::size_t k = 0; k < g.nodes.size(); ++k) x.segment<2>(lay.node[k]) = m.node_capacitance(k) * mean;
    for (std::size_t i = 0; i < g.dgus.size(); ++i) {
        if (!cfg.active.dgu[i]) continue;
        const Vec4 xi = closed_loop_dgu_equilibrium(cfg.refs[i], Vec2::Zero(), g.dgus[i].plant);
        x.segment<2>(lay.dgu_flux[i]) = xi.head<2>();
        x.segment<2>(lay.node[g.dgus[i].node]) = m.node_capacitance(g.dgus[i].node) * cfg.refs[i].vec();
    }
    return x;
}

NetworkEquilibrium solve_equilibrium(const NetworkModel& m, const std::optional<Vec>& warm, const NewtonSettings& s) {
    const auto& free = m.free_states();
    if (free.empty()) throw ValidationError("no active subsystem");
    Vec x = warm ? *warm : flat_start(m);
    if (x.size() != m.size()) throw DimensionError("warm start has the wrong size");
    const Vec rs = m.residual_scales();
    const Vec xs = m.state_scales();
    const auto nf = static_cast<Eigen::Index>(free.size());

    auto residual = [&](const Vec& xv) {
        const Vec f = m.derivative(xv);
        Vec r(nf);
        for (Eigen::Index i = 0; i < nf; ++i) r[i] = f[free[i]] / rs[free[i]];
        return r;
    };
    const FieldFn field = [&m](const Vec& xv, Vec& out) { m.derivative(xv, out); };

    Vec r;
    try {
        r = residual(x);
    } catch (const SingularVoltageError& e) {
        throw SolverError(std::string("equilibrium start point leaves the load domain: ") + e.what());
    }

    NetworkEquilibrium eq;
    int polish = 0;
    int it = 0;
    for (; it < s.max_iterations; ++it) {
        const double rn = r.lpNorm<Eigen::Infinity>();
        if (rn < s.tolerance && (polish >= 3 || rn == 0.0)) break;
        const Mat Jfull = fd_jacobian(field, x, free, xs, s.fd_step, s.exec);
        Mat Jr(nf, nf);
        for (Eigen::Index i = 0; i < nf; ++i) Jr.row(i) = Jfull.row(free[i]) / rs[free[i]];
        const Vec step = Jr.partialPivLu().solve(-r);
        if (!step.allFinite()) throw SolverError("equilibrium Newton step is not finite");

        const double phi0 = 0.5 * r.squaredNorm();
        double alpha = 1.0;
        bool accepted = false;
        Vec xt, rt;
        while (alpha >= 1.0 / 1024.0) {
            xt = x;
            for (Eigen::Index i = 0; i < nf; ++i) xt[free[i]] += alpha * step[i];
            try {
                rt = residual(xt);
                if (rt.allFinite() && 0.5 * rt.squaredNorm() <= (1.0 - 2e-4 * alpha) * phi0) {
                    accepted = true;
                    break;
                }
            } catch (const SingularVoltageError&) {
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (rn < s.tolerance) break;  // converged; polishing stalled at round-off
            std::ostringstream os;
            os << "equilibrium line search failed at iteration " << it << ", residual " << rn;
            throw SolverError(os.str());
        }
        x = xt;
        r = rt;
        if (r.lpNorm<Eigen::Infinity>() < s.tolerance) ++polish;
    }
    eq.residual = r.lpNorm<Eigen::Infinity>();
    eq.iterations = it;
    if (!(eq.residual < s.tolerance)) {
        std::ostringstream os;
        os << "no equilibrium after " << it << " Newton iterations, residual " << eq.residual;
        throw SolverError(os.str());
    }
    eq.x = x;
    eq.config = m.config();
    const Evaluation ev = m.evaluate(x);
    eq.z = ev.z;
    eq.d = ev.d;
    const auto& g = m.graph();
    for (std::size_t i = 0; i < g.dgus.size(); ++i) {
        if (!m.config().active.dgu[i] || g.dgus[i].ctrl.kind == ControllerKind::none) continue;
        const Vec2 e = m.node_voltage(x, g.dgus[i].node) - m.config().refs[i].vec();
        eq.max_reference_error = std::max(eq.max_reference_error, e.lpNorm<Eigen::Infinity>());
    }
    return eq;
}

CompositeStorage::CompositeStorage(const NetworkModel& m, const NetworkEquilibrium& eq)
    : model_(&m), xbar_(eq.x), pi_P22_(m.graph().dgus.size()) {
    if (eq.x.size() != m.size()) throw DimensionError("equilibrium does not match the model");
    const auto& g = m.graph();
    for (std::size_t i = 0; i < g.dgus.size(); ++i) {
        if (!m.config().active.dgu[i] || g.dgus[i].ctrl.kind != ControllerKind::pi) continue;
        const PiCertificate c = certify_pi_gains(g.dgus[i].ctrl.pi, g.dgus[i].plant);
        if (!c.certified) throw CertificationError("PI gains of DGU '" + g.dgus[i].id + "' admit no storage certificate");
        pi_P22_[i] = c.P22;
    }
}

double CompositeStorage::operator()(const Vec& x) const {
    const NetworkModel& m = *model_;
    const auto& g = m.graph();
    const auto& cfg = m.config();
    double H = 0.0;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        if (!cfg.active.node[k]) continue;
        const double C = m.node_capacitance(k);
        const Vec2 e = m.node_voltage(x, k) - m.node_voltage(xbar_, k);
        H += 0.5 * C * e.squaredNorm();
        const auto i = g.dgu_at(k);
        if (!i || !cfg.active.dgu[*i]) continue;
        const auto& dgu = g.dgus[*i];
        const double L = dgu.plant.Lt;
        const Vec2 dI = m.dgu_current(x, *i) - m.dgu_current(xbar_, *i);
        const Vec2 ds = m.controller_state(x, *i) - m.controller_state(xbar_, *i);
        switch (dgu.ctrl.kind) {
        case ControllerKind::ida_pbc: {
            const Vec2 nu(dgu.ctrl.ida.nu11, dgu.ctrl.ida.nu22);
            const Vec2 kI(dgu.ctrl.ida.kI1, dgu.ctrl.ida.kI2);
            for (int j = 0; j < 2; ++j) {
                const double a = dI[j] + nu[j] * kI[j] * ds[j];
                H += 0.5 * L / nu[j] * a * a + 0.5 * nu[j] * kI[j] * ds[j] * ds[j];
            }
            break;
        }
        case ControllerKind::pi: {
            Vec4 w;
            w << L * dI, ds;
            H += 0.5 * w.dot(*pi_P22_[*i] * w);
            break;
        }
        case ControllerKind::none:
            H += 0.5 * L * dI.squaredNorm();
            break;
        }
    }
    for (std::size_t l = 0; l < g.lines.size(); ++l) {
        if (!cfg.active.line[l]) continue;
        const Vec2 dI = m.line_current(x, l) - m.line_current(xbar_, l);
        H += 0.5 * g.lines[l].params.inductance() * dI.squaredNorm();
    }
    return H;
}

LyapunovSeries lyapunov_monitor(const Trajectory& traj, std::size_t first, std::size_t last,
                                const NetworkEquilibrium& eq, double tolerance) {
    if (first > last || last >= traj.size()) throw ValidationError("monitor sample range is out of bounds");
    for (const auto& ev : traj.events) {
        if (ev.sample > first && ev.sample <= last) {
            throw ValidationError("monitor range spans the event at t=" + std::to_string(ev.t));
        }
    }
    const NetworkModel m = traj.model_at(first);
    if (!(m.config() == eq.config)) throw ValidationError("equilibrium belongs to a different configuration");
    const CompositeStorage storage(m, eq);

    // Absolute floor for segments that start at the equilibrium itself.
    constexpr double kFloor = 1e-6;
    LyapunovSeries s;
    for (std::size_t i = first; i <= last; ++i) {
        s.t.push_back(traj.t[i]);
        s.H.push_back(storage(traj.x[i]));
    }
    const double ref = std::max(s.H.front(), kFloor);
    s.dH.push_back(0.0);
    for (std::size_t i = 1; i < s.H.size(); ++i) {
        const double dh = s.H[i] - s.H[i - 1];
        s.dH.push_back(dh);
        s.max_relative_increase = std::max(s.max_relative_increase, dh / ref);
        if (dh > tolerance * ref) ++s.violations;
    }
    s.non_increasing = s.violations == 0;
    return s;
}

LyapunovSeries lyapunov_monitor(const Trajectory& traj, std::size_t segment, double tolerance) {
    const auto& seg = traj.segments.at(segment);
    if (!seg.eq) throw ValidationError("segment has no equilibrium: " + seg.eq_note);
    return lyapunov_monitor(traj, seg.first, seg.last, *seg.eq, tolerance);
}

}  // namespace phmg
