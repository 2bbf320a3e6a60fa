#include "phmg/components.hpp"

#include "phmg/network.hpp"

#include <cmath>
#include <sstream>

namespace phmg {

namespace {

void positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << name << " must be positive and finite, got " << v;
        throw ValidationError(os.str());
    }
}

void nonnegative(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << name << " must be nonnegative and finite, got " << v;
        throw ValidationError(os.str());
    }
}

}  // namespace

void ZipParams::validate() const {
    nonnegative(Yp, "Y_p");
    nonnegative(Yq, "Y_q");
    nonnegative(Ip, "I_p");
    nonnegative(Iq, "I_q");
    nonnegative(Pp, "P_p");
    nonnegative(Pq, "P_q");
}

void ExpParams::validate() const {
    nonnegative(P0, "P0");
    nonnegative(Q0, "Q0");
    positive(V0, "V0");
    if (!std::isfinite(np) || !std::isfinite(nq)) throw ValidationError("EXP exponents must be finite");
}

LoadModel LoadModel::scaled(double factor) const {
    positive(factor, "load scale factor");
    LoadModel out = *this;
    if (auto* z = std::get_if<ZipParams>(&out.params)) {
        z->Yp *= factor;
        z->Yq *= factor;
        z->Ip *= factor;
        z->Iq *= factor;
        z->Pp *= factor;
        z->Pq *= factor;
    } else {
        auto& e = std::get<ExpParams>(out.params);
        e.P0 *= factor;
        e.Q0 *= factor;
    }
    return out;
}

void LoadModel::validate() const {
    std::visit([](const auto& p) { p.validate(); }, params);
    nonnegative(C, "load node capacitance");
    positive(eps_volt, "eps_volt");
}

void DguParams::validate() const {
    positive(Rt, "R_t");
    positive(Lt, "L_t");
    positive(Ct, "C_t");
    positive(omega0, "omega0");
    if (local_load) local_load->validate();
}

void LineParams::validate() const {
    positive(r_per_km, "r_per_km");
    positive(l_per_km, "l_per_km");
    positive(c_per_km, "c_per_km");
    positive(length, "length");
}

LinearIsoPhs build_dgu_phs(const DguParams& p) {
    p.validate();
    const double wl = p.omega0 * p.Lt;
    const double wc = p.omega0 * p.Ct;
    LinearIsoPhs s;
    s.J = Mat::Zero(4, 4);
    s.J(0, 1) = wl;
    s.J(1, 0) = -wl;
    s.J(0, 2) = -1.0;
    s.J(2, 0) = 1.0;
    s.J(1, 3) = -1.0;
    s.J(3, 1) = 1.0;
    s.J(2, 3) = wc;
    s.J(3, 2) = -wc;
    s.R = Mat::Zero(4, 4);
    s.R(0, 0) = p.Rt;
    s.R(1, 1) = p.Rt;
    s.G = Mat::Zero(4, 2);
    s.G(0, 0) = 1.0;
    s.G(1, 1) = 1.0;
    s.K = Mat::Zero(4, 2);
    s.K(2, 0) = 1.0;
    s.K(3, 1) = 1.0;
    s.Q = Vec4(1.0 / p.Lt, 1.0 / p.Lt, 1.0 / p.Ct, 1.0 / p.Ct).asDiagonal();
    return s;
}

Vec2 load_current(const LoadModel& load, const Vec2& V) {
    const double a2 = V.squaredNorm();
    const double a = std::sqrt(a2);
    if (!(a > load.eps_volt)) {
        std::ostringstream os;
        os << "load evaluated at amplitude " << a << " V, at or below " << load.eps_volt << " V";
        throw SingularVoltageError(os.str(), a);
    }
    const double vd = V[0];
    const double vq = V[1];
    if (const auto* z = std::get_if<ZipParams>(&load.params)) {
        const double id = (z->Pp * vd + z->Pq * vq) / a2 + (z->Ip * vd + z->Iq * vq) / a + z->Yp * vd + z->Yq * vq;
        const double iq = (z->Pp * vq - z->Pq * vd) / a2 + (z->Ip * vq - z->Iq * vd) / a + z->Yp * vq - z->Yq * vd;
        return {id, iq};
    }
    const auto& e = std::get<ExpParams>(load.params);
    const double g = e.P0 * std::pow(a, e.np - 2.0) / std::pow(e.V0, e.np);
    const double b = e.Q0 * std::pow(a, e.nq - 2.0) / std::pow(e.V0, e.nq);
    return {g * vd + b * vq, g * vq - b * vd};
}

LinearIsoPhs build_load_node_phs(double C, double omega0) {
    positive(C, "load node capacitance");
    positive(omega0, "omega0");
    LinearIsoPhs s;
    s.J = Mat::Zero(2, 2);
    s.J(0, 1) = omega0 * C;
    s.J(1, 0) = -omega0 * C;
    s.R = Mat::Zero(2, 2);
    s.G = Mat::Zero(2, 0);
    s.K = Mat::Identity(2, 2);
    s.Q = Vec2(1.0 / C, 1.0 / C).asDiagonal();
    return s;
}

LinearIsoPhs build_line_phs(const LineParams& p, double omega0) {
    p.validate();
    positive(omega0, "omega0");
    const double L = p.inductance();
    const double R = p.resistance();
    LinearIsoPhs s;
    s.J = Mat::Zero(2, 2);
    s.J(0, 1) = omega0 * L;
    s.J(1, 0) = -omega0 * L;
    s.R = Mat::Zero(2, 2);
    s.R(0, 0) = R;
    s.R(1, 1) = R;
    s.G = Mat::Zero(2, 0);
    s.K = Mat::Zero(2, 4);
    s.K(0, 0) = 1.0;
    s.K(1, 1) = 1.0;
    s.K(0, 2) = -1.0;
    s.K(1, 3) = -1.0;
    s.Q = Vec2(1.0 / L, 1.0 / L).asDiagonal();
    return s;
}

std::vector<double> effective_capacitances(const MicrogridGraph& graph) {
    std::vector<double> legs(graph.nodes.size(), 0.0);
    for (const auto& line : graph.lines) {
        line.params.validate();
        const double half = 0.5 * line.params.capacitance();
        legs.at(line.from) += half;
        legs.at(line.to) += half;
    }
    for (std::size_t k = 0; k < graph.nodes.size(); ++k) {
        if (!graph.dgu_at(k) && legs[k] <= 0.0) {
            throw ValidationError("load node '" + graph.nodes[k].id + "' has no incident line, its capacitance would be zero");
        }
    }
    return legs;
}

}  // namespace phmg
