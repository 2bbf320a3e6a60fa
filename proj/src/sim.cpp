#include "phmg/sim.hpp"

#include "phmg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace phmg {

const char* to_string(Method m) {
    return m == Method::rk4 ? "rk4" : "trapezoidal";
}

void SolverSettings::validate() const {
    if (!(h > 0.0) || !(h_min > 0.0) || h_min > h) throw ValidationError("solver: need 0 < h_min <= h");
    if (!(newton_tol > 0.0)) throw ValidationError("solver: newton_tol must be positive");
    if (max_newton < 2) throw ValidationError("solver: max_newton must be at least 2");
    if (log_every < 1) throw ValidationError("solver: log_every must be at least 1");
}

std::string Event::kind() const {
    struct V {
        std::string operator()(const PlugIn&) const { return "plug_in"; }
        std::string operator()(const PlugOut&) const { return "plug_out"; }
        std::string operator()(const LoadScale&) const { return "load_scale"; }
        std::string operator()(const RefChange&) const { return "ref_change"; }
    };
    return std::visit(V{}, action);
}

std::string Event::describe() const {
    std::ostringstream os;
    os << kind();
    std::visit(
        [&os](const auto& a) {
            using A = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<A, LoadScale>) {
                os << ' ' << a.node << " x" << a.factor;
            } else if constexpr (std::is_same_v<A, RefChange>) {
                os << ' ' << a.dgu << ' ' << a.ref.Vd << ' ' << a.ref.Vq;
            } else {
                os << ' ' << a.dgu;
            }
        },
        action);
    return os.str();
}

void Scenario::validate() const {
    if (!graph) throw ValidationError("scenario has no graph");
    graph->validate();
    const auto& g = *graph;
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon must be positive");
    if (!(band > 0.0)) throw ValidationError("settling band must be positive");
    if (initial_active.node.size() != g.nodes.size() || initial_active.line.size() != g.lines.size() ||
        initial_active.dgu.size() != g.dgus.size()) {
        throw DimensionError("initial active set does not match the graph");
    }
    if (!weakly_connected(g, initial_active)) throw ValidationError("initial active grid is not weakly connected");
    solver.validate();
    if (x0 && x0->size() != StateLayout::make(g).size) throw DimensionError("initial state has the wrong size");
    double prev = 0.0;
    for (const auto& e : events) {
        if (!(e.t > 0.0) || !(e.t < horizon)) throw ValidationError("event '" + e.describe() + "' lies outside (0, horizon)");
        if (e.t < prev) throw ValidationError("events are not sorted by time");
        prev = e.t;
        std::visit(
            [&g](const auto& a) {
                using A = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<A, LoadScale>) {
                    const auto k = g.find_node(a.node);
                    if (!k) throw ValidationError("event targets unknown node '" + a.node + "'");
                    if (!g.load_at(*k)) throw ValidationError("node '" + a.node + "' has no load to scale");
                    if (!(a.factor > 0.0) || !std::isfinite(a.factor)) throw ValidationError("load scale factor must be positive");
                } else {
                    if (!g.find_dgu(a.dgu)) throw ValidationError("event targets unknown DGU '" + a.dgu + "'");
                    if constexpr (std::is_same_v<A, RefChange>) a.ref.validate();
                }
            },
            e.action);
    }
}

bool Scenario::operator==(const Scenario& o) const {
    const bool same_graph = (graph && o.graph) ? *graph == *o.graph : graph == o.graph;
    const bool same_x0 = x0.has_value() == o.x0.has_value() && (!x0 || (x0->size() == o.x0->size() && *x0 == *o.x0));
    return name == o.name && same_graph && initial_active == o.initial_active && horizon == o.horizon &&
           events == o.events && solver == o.solver && same_x0 && band == o.band;
}

SimState apply_event(const MicrogridGraph& g, SimState s, const Event& e) {
    const StateLayout lay = StateLayout::make(g);
    auto dgu_index = [&g](const std::string& id) {
        const auto i = g.find_dgu(id);
        if (!i) throw ValidationError("event targets unknown DGU '" + id + "'");
        return *i;
    };
    auto plug = [&](const std::string& id, TopologyAction a) {
        const std::size_t i = dgu_index(id);
        s.cfg.active = apply_topology_event(g, s.cfg.active, TopologyEvent{a, i}).active;
        s.x.segment<4>(lay.dgu_flux[i]).setZero();
    };
    std::visit(
        [&](const auto& a) {
            using A = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<A, PlugIn>) {
                plug(a.dgu, TopologyAction::plug_in);
            } else if constexpr (std::is_same_v<A, PlugOut>) {
                plug(a.dgu, TopologyAction::plug_out);
            } else if constexpr (std::is_same_v<A, LoadScale>) {
                const auto k = g.find_node(a.node);
                if (!k || !g.load_at(*k)) throw ValidationError("node '" + a.node + "' has no load to scale");
                if (!(a.factor > 0.0)) throw ValidationError("load scale factor must be positive");
                s.cfg.load_scale[*k] *= a.factor;
            } else {
                a.ref.validate();
                s.cfg.refs[dgu_index(a.dgu)] = a.ref;
            }
        },
        e.action);
    return s;
}

std::size_t Trajectory::segment_of(std::size_t sample) const {
    if (segments.empty() || sample >= size()) throw ValidationError("sample index out of range");
    const auto it = std::upper_bound(segments.begin(), segments.end(), sample,
                                     [](std::size_t s, const TrajectorySegment& seg) { return s < seg.first; });
    return static_cast<std::size_t>(std::distance(segments.begin(), it)) - 1;
}

NetworkModel Trajectory::model_at(std::size_t sample) const {
    return NetworkModel(graph, segments[segment_of(sample)].config);
}

namespace {

// Fixed-step integration of one configuration.
class Stepper {
public:
    Stepper(const NetworkModel& m, const SolverSettings& s, SolverStats& stats)
        : m_(m), s_(s), stats_(stats), free_(m.free_states()), scale_(m.state_scales()),
          nf_(static_cast<Eigen::Index>(free_.size())) {}

    // Advances x by h; fx caches f(x) for the trapezoidal rule. Halves internally down to h_min.
    void step(double t, Vec& x, Vec& fx, double h) {
        if (s_.method == Method::rk4) {
            rk4(x, h);
            return;
        }
        double remaining = h;
        double hs = h;
        while (remaining > 0.0) {
            hs = std::min(hs, remaining);
            if (remaining - hs < 1e-12 * h) hs = remaining;
            if (!have_J_) jacobian(x);
            if (trapezoid(x, fx, hs)) {
                remaining -= hs;
                fresh_ = false;
                stats_.min_step = stats_.min_step == 0.0 ? hs : std::min(stats_.min_step, hs);
                continue;
            }
            ++stats_.rejected;
            if (!fresh_) {
                jacobian(x);
                continue;
            }
            hs *= 0.5;
            if (hs < s_.h_min) {
                std::ostringstream os;
                os << "inner Newton failed to converge at t=" << t + (h - remaining) << " s with step below "
                   << s_.h_min << " s";
                if (domain_exit_) {
                    os << "; load amplitude left the model domain";
                    throw SingularVoltageError(os.str(), 0.0);
                }
                throw SolverError(os.str());
            }
        }
    }

    void eval(const Vec& x, Vec& out) {
        m_.derivative(x, out, s_.exec);
        ++stats_.field_evaluations;
    }

private:
    void jacobian(const Vec& x) {
        const FieldFn f = [this](const Vec& xv, Vec& out) { m_.derivative(xv, out, Exec::serial); };
        const Mat full = fd_jacobian(f, x, free_, scale_, 1e-7, s_.exec);
        J_.resize(nf_, nf_);
        for (Eigen::Index i = 0; i < nf_; ++i) J_.row(i) = full.row(free_[i]);
        stats_.field_evaluations += 2 * free_.size() + 1;
        ++stats_.jacobians;
        have_J_ = true;
        fresh_ = true;
        lu_h_ = 0.0;
    }

    bool trapezoid(Vec& x, Vec& fx, double h) {
        if (lu_h_ != h) {
            lu_.compute(Mat::Identity(nf_, nf_) - 0.5 * h * J_);
            lu_h_ = h;
        }
        domain_exit_ = false;
        y_ = x + h * fx;
        double prev = std::numeric_limits<double>::infinity();
        for (int it = 0; it < s_.max_newton; ++it) {
            try {
                eval(y_, fy_);
            } catch (const SingularVoltageError&) {
                domain_exit_ = true;
                return false;
            }
            Vec r(nf_);
            for (Eigen::Index i = 0; i < nf_; ++i) {
                const int j = free_[i];
                r[i] = y_[j] - x[j] - 0.5 * h * (fx[j] + fy_[j]);
            }
            const Vec delta = lu_.solve(-r);
            double err = 0.0;
            for (Eigen::Index i = 0; i < nf_; ++i) {
                const int j = free_[i];
                y_[j] += delta[i];
                err = std::max(err, std::abs(delta[i]) / std::max(std::abs(y_[j]), scale_[j]));
            }
            ++stats_.newton_iterations;
            if (!std::isfinite(err)) return false;
            if (err < s_.newton_tol) {
                try {
                    eval(y_, fy_);
                } catch (const SingularVoltageError&) {
                    domain_exit_ = true;
                    return false;
                }
                x.swap(y_);
                fx.swap(fy_);
                ++stats_.steps;
                return true;
            }
            // Contraction too slow for a reused Jacobian.
            if (it >= 1 && err > 0.5 * prev) return false;
            prev = err;
        }
        return false;
    }

    void rk4(Vec& x, double h) {
        Vec k1, k2, k3, k4;
        eval(x, k1);
        eval(x + 0.5 * h * k1, k2);
        eval(x + 0.5 * h * k2, k3);
        eval(x + h * k3, k4);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        ++stats_.steps;
        stats_.min_step = stats_.min_step == 0.0 ? h : std::min(stats_.min_step, h);
    }

    const NetworkModel& m_;
    const SolverSettings& s_;
    SolverStats& stats_;
    std::vector<int> free_;
    Vec scale_;
    Eigen::Index nf_;
    Mat J_;
    bool have_J_ = false;
    bool fresh_ = false;
    bool domain_exit_ = false;
    double lu_h_ = 0.0;
    Eigen::PartialPivLU<Mat> lu_;
    Vec y_, fy_;
};

void log_sample(Trajectory& tr, const NetworkModel& m, const CompositeStorage* storage, double t, const Vec& x) {
    Evaluation e = m.evaluate(x);
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.z.push_back(std::move(e.z));
    tr.d.push_back(std::move(e.d));
    tr.u.push_back(std::move(e.u));
    tr.H.push_back(storage ? (*storage)(x) : std::numeric_limits<double>::quiet_NaN());
}

long step_count(double span, double h) {
    const double r = span / h;
    const long n = std::lround(r);
    if (n >= 1 && std::abs(static_cast<double>(n) - r) <= 1e-9 * r) return n;
    return std::max(1L, static_cast<long>(std::ceil(r)));
}

void run_segment(Trajectory& tr, const Scenario& sc, SimState& st, double t1) {
    const NetworkModel m(sc.graph, st.cfg);
    TrajectorySegment seg;
    seg.t0 = st.t;
    seg.t1 = t1;
    seg.first = tr.size();
    seg.config = st.cfg;

    std::optional<CompositeStorage> storage;
    if (sc.solver.monitor) {
        try {
            seg.eq = solve_equilibrium(m);
            storage.emplace(m, *seg.eq);
        } catch (const Error& e) {
            seg.eq_note = e.what();
            seg.eq.reset();
        }
    }
    const CompositeStorage* H = storage ? &*storage : nullptr;

    log_sample(tr, m, H, st.t, st.x);
    const double t0 = st.t;
    const long n = step_count(t1 - t0, sc.solver.h);
    const double h = (t1 - t0) / static_cast<double>(n);
    Stepper stepper(m, sc.solver, tr.stats);
    Vec fx;
    try {
        stepper.eval(st.x, fx);
        for (long k = 1; k <= n; ++k) {
            stepper.step(st.t, st.x, fx, h);
            st.t = k == n ? t1 : t0 + static_cast<double>(k) * h;
            if (!st.x.allFinite()) {
                std::ostringstream os;
                os << "state diverged at t=" << st.t << " s";
                throw SolverError(os.str());
            }
            if (k % sc.solver.log_every == 0 || k == n) log_sample(tr, m, H, st.t, st.x);
        }
    } catch (const SingularVoltageError& e) {
        std::ostringstream os;
        os << "integration aborted near t=" << st.t << " s: " << e.what();
        throw SingularVoltageError(os.str(), e.amplitude());
    }
    seg.last = tr.size() - 1;
    tr.segments.push_back(std::move(seg));
}

}  // namespace

Trajectory integrate(const Scenario& sc) {
    sc.validate();
    const auto& g = *sc.graph;
    Trajectory tr;
    tr.graph = sc.graph;
    SimState st;
    st.cfg = ModelConfig::from_graph(g, sc.initial_active);
    st.x = sc.x0 ? *sc.x0 : NetworkModel(sc.graph, st.cfg).default_initial_state();

    std::size_t next = 0;
    while (true) {
        const double t1 = next < sc.events.size() ? sc.events[next].t : sc.horizon;
        run_segment(tr, sc, st, t1);
        if (next >= sc.events.size()) break;
        // Events sharing a time stamp are applied together.
        while (next < sc.events.size() && sc.events[next].t == t1) {
            st = apply_event(g, std::move(st), sc.events[next]);
            tr.events.push_back({t1, tr.size(), sc.events[next].describe()});
            ++next;
        }
    }
    return tr;
}

SettlingReport settling_metrics(const Trajectory& traj, double band) {
    if (!(band > 0.0)) throw ValidationError("settling band must be positive");
    SettlingReport rep;
    rep.band = band;
    const auto& g = *traj.graph;
    for (const auto& seg : traj.segments) {
        const NetworkModel m(traj.graph, seg.config);
        for (std::size_t i = 0; i < g.dgus.size(); ++i) {
            WindowMetrics w;
            w.dgu = g.dgus[i].id;
            w.t_start = seg.t0;
            w.t_end = seg.t1;
            w.controlled = seg.config.active.dgu[i] && g.dgus[i].ctrl.kind != ControllerKind::none;
            const Vec2 ref = seg.config.refs[i].vec();
            const std::size_t node = g.dgus[i].node;
            const Vec2 e0 = m.node_voltage(traj.x[seg.first], node) - ref;
            Vec2 opposite = Vec2::Zero();
            Vec2 largest = Vec2::Zero();
            std::optional<std::size_t> last_out;
            for (std::size_t s = seg.first; s <= seg.last; ++s) {
                const Vec2 e = m.node_voltage(traj.x[s], node) - ref;
                for (int j = 0; j < 2; ++j) {
                    largest[j] = std::max(largest[j], std::abs(e[j]));
                    if (e0[j] * e[j] < 0.0) opposite[j] = std::max(opposite[j], std::abs(e[j]));
                }
                if (e.lpNorm<Eigen::Infinity>() > band) last_out = s;
                if (s == seg.last) w.final_error = e.lpNorm<Eigen::Infinity>();
            }
            for (int j = 0; j < 2; ++j) {
                const double o = std::abs(e0[j]) > band ? opposite[j] : largest[j];
                w.overshoot = std::max(w.overshoot, o);
            }
            w.max_deviation = largest.maxCoeff();
            if (!last_out) {
                w.settle = 0.0;
            } else if (*last_out < seg.last) {
                w.settle = traj.t[*last_out + 1] - seg.t0;
            }
            rep.windows.push_back(std::move(w));
        }
    }
    return rep;
}

}  // namespace phmg
