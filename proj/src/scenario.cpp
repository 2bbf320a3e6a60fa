#include "phmg/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace phmg {

using nlohmann::json;

namespace {

// Feeder 1 of the CIGRE medium-voltage benchmark as an islanded grid.
constexpr const char* kFeeder1 = R"({
  "name": "cigre-feeder1",
  "base": {"V0": 20000.0, "f0": 50.0},
  "horizon": 7.0,
  "dgus": [
    {"id": "DGU1", "node": "1", "filter": {"R": 0.1, "L": 1.8e-3, "C": 25e-6},
     "controller": {"kind": "pi", "KP": 1000.0, "KI": 1000.0, "k11_form": "passive"},
     "refs_pu": [0.9, 0.55]},
    {"id": "DGU2", "node": "2", "filter": {"R": 0.1, "L": 1.8e-3, "C": 25e-6},
     "controller": {"kind": "ida_pbc", "alpha": [-5.0, -5.0], "nu": [1.0, 1.0], "kI": [100.0, 100.0]},
     "refs_pu": [0.85, 0.6]},
    {"id": "DGU3", "node": "3", "filter": {"R": 0.1, "L": 1.8e-3, "C": 25e-6},
     "controller": {"kind": "ida_pbc", "alpha": [-5.0, -5.0], "nu": [1.0, 1.0], "kI": [100.0, 100.0]},
     "refs_pu": [0.8, 0.65]},
    {"id": "DGU4", "node": "4", "filter": {"R": 0.1, "L": 1.8e-3, "C": 25e-6},
     "controller": {"kind": "ida_pbc", "alpha": [-5.0, -5.0], "nu": [1.0, 1.0], "kI": [100.0, 100.0]},
     "refs_pu": [0.75, 0.7]},
    {"id": "DGU5", "node": "5", "filter": {"R": 0.1, "L": 1.8e-3, "C": 25e-6},
     "controller": {"kind": "ida_pbc", "alpha": [-5.0, -5.0], "nu": [1.0, 1.0], "kI": [100.0, 100.0]},
     "refs_pu": [0.7, 0.75], "connected": false},
    {"id": "DGU6", "node": "6", "filter": {"R": 0.1, "L": 1.8e-3, "C": 25e-6},
     "controller": {"kind": "ida_pbc", "alpha": [-5.0, -5.0], "nu": [1.0, 1.0], "kI": [100.0, 100.0]},
     "refs_pu": [0.65, 0.8]}
  ],
  "loads": [
    {"id": "L1", "node": "1", "kind": "zip", "Y": [75e-6, 75e-6], "I": [0.3, 0.3], "P": [6000.0, 6000.0]},
    {"id": "L2", "node": "2", "kind": "zip", "Y": [97.5e-6, 97.5e-6], "I": [0.39, 0.39], "P": [7800.0, 7800.0]},
    {"id": "L4", "node": "4", "kind": "zip", "Y": [51.96e-6, 51.96e-6], "I": [0.208, 0.208], "P": [4157.0, 4157.0]},
    {"id": "L5", "node": "5", "kind": "zip", "Y": [80.8e-6, 80.8e-6], "I": [0.323, 0.323], "P": [6464.0, 6464.0]},
    {"id": "L7", "node": "7", "kind": "zip", "Y": [51.96e-6, 51.96e-6], "I": [0.208, 0.208], "P": [4157.0, 4157.0]},
    {"id": "L8", "node": "8", "kind": "zip", "Y": [58.48e-6, 58.48e-6], "I": [0.234, 0.234], "P": [4679.0, 4679.0]},
    {"id": "L9", "node": "9", "kind": "exp", "P0": 50900.0, "Q0": 50900.0, "np": 1.5, "nq": 1.5},
    {"id": "L10", "node": "10", "kind": "exp", "P0": 72800.0, "Q0": 72800.0, "np": 1.5, "nq": 1.5},
    {"id": "L11", "node": "11", "kind": "exp", "P0": 80000.0, "Q0": 80000.0, "np": 1.5, "nq": 1.5}
  ],
  "lines": [
    {"id": "12", "from": "1", "to": "7", "length_km": 2.8},
    {"id": "13", "from": "7", "to": "2", "length_km": 4.4},
    {"id": "14", "from": "2", "to": "8", "length_km": 0.6},
    {"id": "15", "from": "8", "to": "3", "length_km": 0.6},
    {"id": "16", "from": "2", "to": "5", "length_km": 1.3},
    {"id": "17", "from": "8", "to": "9", "length_km": 0.5},
    {"id": "18", "from": "9", "to": "4", "length_km": 0.3},
    {"id": "19", "from": "3", "to": "6", "length_km": 1.5},
    {"id": "20", "from": "4", "to": "10", "length_km": 0.8},
    {"id": "21", "from": "10", "to": "5", "length_km": 0.3},
    {"id": "22", "from": "5", "to": "11", "length_km": 1.7},
    {"id": "23", "from": "11", "to": "6", "length_km": 0.2}
  ],
  "line_defaults": {"r_per_km": 0.343, "l_per_km": 0.875e-3, "c_per_km": 151.7e-9,
                    "zero_sequence": [0.817, 5.087e-3, 151.7e-9]},
  "events": [
    {"t": 4.0, "kind": "plug_in", "dgu": "DGU5"},
    {"t": 5.0, "kind": "load_scale", "node": "5", "factor": 1.5},
    {"t": 6.0, "kind": "load_scale", "node": "8", "factor": 1.5}
  ],
  "solver": {"method": "trapezoidal", "h": 1e-5, "newton_tol": 1e-10, "h_min": 1e-8, "max_newton": 12,
             "log_every": 100, "parallel": false, "monitor": true},
  "output": {"band_V": 2.0}
})";

json saturation_variant() {
    json j = json::parse(kFeeder1);
    j["name"] = "cigre-feeder1-saturation";
    j["horizon"] = 3.0;
    j["events"] = json::array();
    for (auto& d : j["dgus"]) {
        d.erase("connected");
        d["saturation"] = {{"fraction_of_steady", 0.8}};
    }
    return j;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ValidationError(path + ": " + msg); }

const json& field(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) fail(join(path, key), "missing");
    return *it;
}

double number(const json& j, const std::string& key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_number()) fail(join(path, key), "expected a number");
    return v.get<double>();
}

double number_or(const json& j, const std::string& key, const std::string& path, double def) {
    return j.contains(key) ? number(j, key, path) : def;
}

std::string text(const json& j, const std::string& key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_string()) fail(join(path, key), "expected a string");
    return v.get<std::string>();
}

bool flag_or(const json& j, const std::string& key, const std::string& path, bool def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_boolean()) fail(join(path, key), "expected true or false");
    return v.get<bool>();
}

Vec2 pair(const json& j, const std::string& key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        fail(join(path, key), "expected two numbers");
    }
    return {v[0].get<double>(), v[1].get<double>()};
}

Mat2 matrix2(const json& j, const std::string& key, const std::string& path) {
    const json& v = field(j, key, path);
    Mat2 m;
    if (!v.is_array() || v.size() != 2) fail(join(path, key), "expected a 2x2 matrix");
    for (int r = 0; r < 2; ++r) {
        if (!v[r].is_array() || v[r].size() != 2 || !v[r][0].is_number() || !v[r][1].is_number()) {
            fail(join(path, key), "expected a 2x2 matrix");
        }
        m(r, 0) = v[r][0].get<double>();
        m(r, 1) = v[r][1].get<double>();
    }
    return m;
}

json to_json(const Mat2& m) { return json::array({{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}); }

template <typename Fn>
void checked(const std::string& path, Fn fn) {
    try {
        fn();
    } catch (const ValidationError& e) {
        fail(path, e.what());
    }
}

// Numeric ids sort by value, others lexicographically after them.
bool id_less(const std::string& a, const std::string& b) {
    auto numeric = [](const std::string& s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    const bool na = numeric(a), nb = numeric(b);
    if (na != nb) return na;
    if (na && a.size() != b.size()) return a.size() < b.size();
    return a < b;
}

const char* controller_name(ControllerKind k) {
    switch (k) {
    case ControllerKind::ida_pbc: return "ida_pbc";
    case ControllerKind::pi: return "pi";
    case ControllerKind::none: return "none";
    }
    return "?";
}

ControllerConfig parse_controller(const json& j, const std::string& path, const DguParams& plant) {
    ControllerConfig c;
    const std::string kind = text(j, "kind", path);
    if (kind == "ida_pbc") {
        c.kind = ControllerKind::ida_pbc;
        const Vec2 a = pair(j, "alpha", path), nu = pair(j, "nu", path), ki = pair(j, "kI", path);
        c.ida = {a[0], a[1], nu[0], nu[1], ki[0], ki[1]};
        checked(path, [&] { c.ida.validate(); });
    } else if (kind == "pi") {
        c.kind = ControllerKind::pi;
        if (j.contains("KP")) {
            PiTuning t;
            t.KP = number(j, "KP", path);
            t.KI = number(j, "KI", path);
            const std::string form = j.contains("k11_form") ? text(j, "k11_form", path) : "passive";
            if (form == "passive") {
                t.form = PiVoltageGain::passive;
            } else if (form == "as_printed") {
                t.form = PiVoltageGain::as_printed;
            } else {
                fail(join(path, "k11_form"), "expected 'passive' or 'as_printed'");
            }
            checked(path, [&] { c.pi = pi_gains_from_tuning(t, plant); });
        } else {
            c.pi.K11 = matrix2(j, "K11", path);
            c.pi.K12 = matrix2(j, "K12", path);
            c.pi.K13 = matrix2(j, "K13", path);
        }
    } else if (kind == "none") {
        c.kind = ControllerKind::none;
    } else {
        fail(join(path, "kind"), "unknown controller '" + kind + "'");
    }
    return c;
}

json dump_controller(const ControllerConfig& c) {
    json j;
    j["kind"] = controller_name(c.kind);
    if (c.kind == ControllerKind::ida_pbc) {
        j["alpha"] = {c.ida.alpha11, c.ida.alpha22};
        j["nu"] = {c.ida.nu11, c.ida.nu22};
        j["kI"] = {c.ida.kI1, c.ida.kI2};
    } else if (c.kind == ControllerKind::pi) {
        if (c.pi.tuning) {
            j["KP"] = c.pi.tuning->KP;
            j["KI"] = c.pi.tuning->KI;
            j["k11_form"] = c.pi.tuning->form == PiVoltageGain::passive ? "passive" : "as_printed";
        } else {
            j["K11"] = to_json(c.pi.K11);
            j["K12"] = to_json(c.pi.K12);
            j["K13"] = to_json(c.pi.K13);
        }
    }
    return j;
}

// References in p.u. when that reproduces the stored volts exactly, otherwise in volts.
void dump_ref(json& j, const VoltageReference& r, double V0) {
    const double d = r.Vd / V0, q = r.Vq / V0;
    if (d * V0 == r.Vd && q * V0 == r.Vq) {
        j["refs_pu"] = {d, q};
    } else {
        j["refs_V"] = {r.Vd, r.Vq};
    }
}

VoltageReference parse_ref(const json& j, const std::string& path, double V0) {
    VoltageReference r;
    if (j.contains("refs_V")) {
        const Vec2 v = pair(j, "refs_V", path);
        r = {v[0], v[1]};
    } else {
        const Vec2 v = pair(j, "refs_pu", path);
        r = {v[0] * V0, v[1] * V0};
    }
    checked(path, [&] { r.validate(); });
    return r;
}

struct LoadEntry {
    std::string id;
    std::string node;
    LoadModel model;
};

LoadEntry parse_load(const json& j, const std::string& path, double V0) {
    LoadEntry e;
    e.id = text(j, "id", path);
    e.node = text(j, "node", path);
    const std::string kind = text(j, "kind", path);
    if (kind == "zip") {
        const Vec2 Y = pair(j, "Y", path), I = pair(j, "I", path), P = pair(j, "P", path);
        e.model.params = ZipParams{Y[0], Y[1], I[0], I[1], P[0], P[1]};
    } else if (kind == "exp") {
        e.model.params = ExpParams{number(j, "P0", path), number(j, "Q0", path), number(j, "np", path),
                                   number(j, "nq", path), number_or(j, "V0", path, V0)};
    } else {
        fail(join(path, "kind"), "unknown load kind '" + kind + "'");
    }
    e.model.eps_volt = number_or(j, "eps_volt", path, e.model.eps_volt);
    checked(path, [&] { e.model.validate(); });
    return e;
}

json dump_load(const std::string& id, const std::string& node, const LoadModel& l, double V0) {
    json j;
    j["id"] = id;
    j["node"] = node;
    if (l.is_zip()) {
        const auto& z = l.zip();
        j["kind"] = "zip";
        j["Y"] = {z.Yp, z.Yq};
        j["I"] = {z.Ip, z.Iq};
        j["P"] = {z.Pp, z.Pq};
    } else {
        const auto& e = l.exp();
        j["kind"] = "exp";
        j["P0"] = e.P0;
        j["Q0"] = e.Q0;
        j["np"] = e.np;
        j["nq"] = e.nq;
        if (e.V0 != V0) j["V0"] = e.V0;
    }
    j["eps_volt"] = l.eps_volt;
    return j;
}

// Command of every DGU at the unconstrained equilibrium of the initial configuration.
std::vector<Vec2> steady_commands(const std::shared_ptr<const MicrogridGraph>& g, const ActiveSet& active) {
    const NetworkModel m(g, ModelConfig::from_graph(*g, active));
    const NetworkEquilibrium eq = solve_equilibrium(m);
    const Evaluation ev = m.evaluate(eq.x);
    std::vector<Vec2> u;
    for (const auto& c : ev.u) u.push_back(c.raw);
    return u;
}

Scenario from_json(const json& doc) {
    Scenario sc;
    sc.name = text(doc, "name", "");
    const json& base = field(doc, "base", "");
    const double V0 = number(base, "V0", "base");
    const double f0 = number(base, "f0", "base");
    if (!(V0 > 0.0)) fail("base.V0", "must be positive");
    if (!(f0 > 0.0)) fail("base.f0", "must be positive");
    sc.horizon = number(doc, "horizon", "");

    auto g = std::make_shared<MicrogridGraph>();
    g->V0 = V0;
    g->omega0 = 2.0 * std::numbers::pi * f0;

    const json& dgus = field(doc, "dgus", "");
    const json& loads = field(doc, "loads", "");
    const json& lines = field(doc, "lines", "");
    if (!dgus.is_array()) fail("dgus", "expected an array");
    if (!loads.is_array()) fail("loads", "expected an array");
    if (!lines.is_array()) fail("lines", "expected an array");

    // Member nodes are every id a DGU, load or line refers to.
    std::set<std::string, decltype(&id_less)> ids(&id_less);
    for (std::size_t i = 0; i < dgus.size(); ++i) ids.insert(text(dgus[i], "node", index("dgus", i)));
    for (std::size_t i = 0; i < loads.size(); ++i) ids.insert(text(loads[i], "node", index("loads", i)));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        ids.insert(text(lines[i], "from", index("lines", i)));
        ids.insert(text(lines[i], "to", index("lines", i)));
    }
    std::map<std::string, std::size_t> node_index;
    for (const auto& id : ids) {
        node_index[id] = g->nodes.size();
        g->nodes.push_back({id, std::nullopt, {}});
    }

    const json empty = json::object();
    const json& defaults = doc.contains("line_defaults") ? doc.at("line_defaults") : empty;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string path = index("lines", i);
        const json& lj = lines[i];
        Line l;
        l.id = text(lj, "id", path);
        l.from = node_index.at(text(lj, "from", path));
        l.to = node_index.at(text(lj, "to", path));
        auto param = [&](const char* key) {
            return lj.contains(key) ? number(lj, key, path) : number(defaults, key, "line_defaults");
        };
        l.params.r_per_km = param("r_per_km");
        l.params.l_per_km = param("l_per_km");
        l.params.c_per_km = param("c_per_km");
        l.params.length = number(lj, "length_km", path);
        const json& zs = lj.contains("zero_sequence") ? lj.at("zero_sequence")
                         : defaults.contains("zero_sequence") ? defaults.at("zero_sequence")
                                                              : json();
        if (!zs.is_null()) {
            if (!zs.is_array() || zs.size() != 3 || !zs[0].is_number() || !zs[1].is_number() || !zs[2].is_number()) {
                fail(join(path, "zero_sequence"), "expected [r_per_km, l_per_km, c_per_km]");
            }
            l.params.zero_sequence = std::array<double, 3>{zs[0].get<double>(), zs[1].get<double>(), zs[2].get<double>()};
        }
        checked(path, [&] { l.params.validate(); });
        g->lines.push_back(std::move(l));
    }

    std::vector<LoadEntry> load_entries;
    std::set<std::string> load_ids;
    for (std::size_t i = 0; i < loads.size(); ++i) {
        load_entries.push_back(parse_load(loads[i], index("loads", i), V0));
        if (!load_ids.insert(load_entries.back().id).second) {
            fail(index("loads", i), "duplicate load id '" + load_entries.back().id + "'");
        }
    }

    std::vector<std::optional<SaturationLimits>> sat(dgus.size());
    std::vector<double> sat_fraction(dgus.size(), 0.0);
    sc.initial_active.dgu.assign(dgus.size(), true);
    for (std::size_t i = 0; i < dgus.size(); ++i) {
        const std::string path = index("dgus", i);
        const json& dj = dgus[i];
        Dgu d;
        d.id = text(dj, "id", path);
        d.node = node_index.at(text(dj, "node", path));
        const json& f = field(dj, "filter", path);
        const std::string fpath = join(path, "filter");
        d.plant = {number(f, "R", fpath), number(f, "L", fpath), number(f, "C", fpath), g->omega0, std::nullopt};
        checked(fpath, [&] { d.plant.validate(); });
        d.ctrl = parse_controller(field(dj, "controller", path), join(path, "controller"), d.plant);
        d.ctrl.ref = parse_ref(dj, path, V0);
        if (dj.contains("saturation")) {
            const json& s = dj.at("saturation");
            const std::string spath = join(path, "saturation");
            if (s.contains("fraction_of_steady")) {
                sat_fraction[i] = number(s, "fraction_of_steady", spath);
                if (!(sat_fraction[i] > 0.0)) fail(join(spath, "fraction_of_steady"), "must be positive");
            } else {
                sat[i] = SaturationLimits{number(s, "Vd_sat", spath), number(s, "Vq_sat", spath)};
                checked(spath, [&] { sat[i]->validate(); });
            }
        }
        sc.initial_active.dgu[i] = flag_or(dj, "connected", path, true);
        g->dgus.push_back(std::move(d));
    }

    for (auto& e : load_entries) {
        const auto it = node_index.find(e.node);
        const std::size_t k = it->second;
        if (const auto i = g->dgu_at(k)) {
            if (g->dgus[*i].plant.local_load) fail("loads", "node '" + e.node + "' has more than one load");
            g->dgus[*i].plant.local_load = e.model;
            g->dgus[*i].load_id = e.id;
        } else {
            if (g->nodes[k].load) fail("loads", "node '" + e.node + "' has more than one load");
            g->nodes[k].load = e.model;
            g->nodes[k].load_id = e.id;
        }
    }
    // Lone-standing load nodes carry the lumped line legs.
    std::vector<double> legs;
    checked("lines", [&] { legs = effective_capacitances(*g); });
    for (std::size_t k = 0; k < g->nodes.size(); ++k) {
        if (g->nodes[k].load) g->nodes[k].load->C = legs[k];
    }
    checked("grid", [&] { g->validate(); });

    sc.initial_active.node.assign(g->nodes.size(), true);
    sc.initial_active.line.assign(g->lines.size(), true);

    // Saturation given as a fraction of the unconstrained steady command.
    if (std::any_of(sat_fraction.begin(), sat_fraction.end(), [](double f) { return f > 0.0; })) {
        std::vector<Vec2> u;
        checked("dgus", [&] { u = steady_commands(g, sc.initial_active); });
        for (std::size_t i = 0; i < sat.size(); ++i) {
            if (sat_fraction[i] > 0.0) {
                sat[i] = SaturationLimits{sat_fraction[i] * std::abs(u[i][0]), sat_fraction[i] * std::abs(u[i][1])};
                checked(index("dgus", i) + ".saturation", [&] { sat[i]->validate(); });
            }
        }
    }
    for (std::size_t i = 0; i < sat.size(); ++i) g->dgus[i].ctrl.sat = sat[i];

    for (const auto& d : g->dgus) {
        if (d.ctrl.kind != ControllerKind::pi) continue;
        const PiCertificate c = certify_pi_gains(d.ctrl.pi, d.plant);
        if (!c.certified) {
            std::ostringstream os;
            os << "PI gains of DGU '" << d.id << "' admit no storage certificate (lambda_max " << c.lambda_max
               << ", scale " << c.scale << ")";
            throw CertificationError(os.str());
        }
    }
    sc.graph = g;

    if (doc.contains("events")) {
        const json& evs = doc.at("events");
        if (!evs.is_array()) fail("events", "expected an array");
        for (std::size_t i = 0; i < evs.size(); ++i) {
            const std::string path = index("events", i);
            const json& ej = evs[i];
            Event e;
            e.t = number(ej, "t", path);
            const std::string kind = text(ej, "kind", path);
            if (kind == "plug_in") {
                e.action = PlugIn{text(ej, "dgu", path)};
            } else if (kind == "plug_out") {
                e.action = PlugOut{text(ej, "dgu", path)};
            } else if (kind == "load_scale") {
                e.action = LoadScale{text(ej, "node", path), number(ej, "factor", path)};
            } else if (kind == "ref_change") {
                e.action = RefChange{text(ej, "dgu", path), parse_ref(ej, path, V0)};
            } else {
                fail(join(path, "kind"), "unknown event kind '" + kind + "'");
            }
            sc.events.push_back(std::move(e));
        }
    }

    if (doc.contains("solver")) {
        const json& s = doc.at("solver");
        SolverSettings& o = sc.solver;
        if (s.contains("method")) {
            const std::string m = text(s, "method", "solver");
            if (m == "trapezoidal") {
                o.method = Method::trapezoidal;
            } else if (m == "rk4") {
                o.method = Method::rk4;
            } else {
                fail("solver.method", "expected 'trapezoidal' or 'rk4'");
            }
        }
        o.h = number_or(s, "h", "solver", o.h);
        o.newton_tol = number_or(s, "newton_tol", "solver", o.newton_tol);
        o.h_min = number_or(s, "h_min", "solver", o.h_min);
        o.max_newton = static_cast<int>(number_or(s, "max_newton", "solver", o.max_newton));
        o.log_every = static_cast<int>(number_or(s, "log_every", "solver", o.log_every));
        o.exec = flag_or(s, "parallel", "solver", false) ? Exec::parallel : Exec::serial;
        o.monitor = flag_or(s, "monitor", "solver", o.monitor);
    }
    if (doc.contains("output")) sc.band = number_or(doc.at("output"), "band_V", "output", sc.band);

    checked("scenario", [&] { sc.validate(); });
    return sc;
}

json to_json(const Scenario& sc) {
    const auto& g = *sc.graph;
    json doc;
    doc["name"] = sc.name;
    doc["base"] = {{"V0", g.V0}, {"f0", g.omega0 / (2.0 * std::numbers::pi)}};
    doc["horizon"] = sc.horizon;
    json dgus = json::array();
    json loads = json::array();
    for (std::size_t i = 0; i < g.dgus.size(); ++i) {
        const auto& d = g.dgus[i];
        json j;
        j["id"] = d.id;
        j["node"] = g.nodes[d.node].id;
        j["filter"] = {{"R", d.plant.Rt}, {"L", d.plant.Lt}, {"C", d.plant.Ct}};
        j["controller"] = dump_controller(d.ctrl);
        dump_ref(j, d.ctrl.ref, g.V0);
        if (d.ctrl.sat) j["saturation"] = {{"Vd_sat", d.ctrl.sat->Vd_sat}, {"Vq_sat", d.ctrl.sat->Vq_sat}};
        if (!sc.initial_active.dgu[i]) j["connected"] = false;
        dgus.push_back(std::move(j));
        if (d.plant.local_load) loads.push_back(dump_load(d.load_id, g.nodes[d.node].id, *d.plant.local_load, g.V0));
    }
    for (const auto& n : g.nodes) {
        if (n.load) loads.push_back(dump_load(n.load_id, n.id, *n.load, g.V0));
    }
    json lines = json::array();
    for (const auto& l : g.lines) {
        json j;
        j["id"] = l.id;
        j["from"] = g.nodes[l.from].id;
        j["to"] = g.nodes[l.to].id;
        j["length_km"] = l.params.length;
        j["r_per_km"] = l.params.r_per_km;
        j["l_per_km"] = l.params.l_per_km;
        j["c_per_km"] = l.params.c_per_km;
        if (l.params.zero_sequence) {
            const auto& z = *l.params.zero_sequence;
            j["zero_sequence"] = {z[0], z[1], z[2]};
        }
        lines.push_back(std::move(j));
    }
    doc["dgus"] = std::move(dgus);
    doc["loads"] = std::move(loads);
    doc["lines"] = std::move(lines);
    json evs = json::array();
    for (const auto& e : sc.events) {
        json j;
        j["t"] = e.t;
        j["kind"] = e.kind();
        std::visit(
            [&](const auto& a) {
                using A = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<A, LoadScale>) {
                    j["node"] = a.node;
                    j["factor"] = a.factor;
                } else {
                    j["dgu"] = a.dgu;
                    if constexpr (std::is_same_v<A, RefChange>) dump_ref(j, a.ref, g.V0);
                }
            },
            e.action);
        evs.push_back(std::move(j));
    }
    doc["events"] = std::move(evs);
    const SolverSettings& s = sc.solver;
    doc["solver"] = {{"method", to_string(s.method)}, {"h", s.h},
                     {"newton_tol", s.newton_tol}, {"h_min", s.h_min},
                     {"max_newton", s.max_newton}, {"log_every", s.log_every},
                     {"parallel", s.exec == Exec::parallel}, {"monitor", s.monitor}};
    doc["output"] = {{"band_V", sc.band}};
    return doc;
}

}  // namespace

std::vector<std::string> preset_names() { return {"cigre-feeder1", "cigre-feeder1-saturation"}; }

std::string preset_text(const std::string& name) {
    if (name == "cigre-feeder1") return json::parse(kFeeder1).dump(2);
    if (name == "cigre-feeder1-saturation") return saturation_variant().dump(2);
    throw ValidationError("unknown preset '" + name + "'");
}

Scenario parse_scenario(const std::string& body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("parse error: ") + e.what());
    }
    return from_json(doc);
}

Scenario load_scenario(const std::string& name_or_path) {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
        return parse_scenario(preset_text(name_or_path));
    }
    std::ifstream in(name_or_path);
    if (!in) throw ValidationError("cannot open scenario '" + name_or_path + "' (not a file or preset)");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string dump_scenario(const Scenario& s) {
    if (!s.graph) throw ValidationError("scenario has no graph");
    return to_json(s).dump(2);
}

}  // namespace phmg
