#pragma once

#include "phmg/phs.hpp"
#include "phmg/types.hpp"

#include <array>
#include <optional>
#include <variant>
#include <vector>

namespace phmg {

struct MicrogridGraph;

struct ZipParams {
    double Yp = 0.0, Yq = 0.0;  // S
    double Ip = 0.0, Iq = 0.0;  // A
    double Pp = 0.0, Pq = 0.0;  // W, var

    void validate() const;
    bool operator==(const ZipParams&) const = default;
};

struct ExpParams {
    double P0 = 0.0;  // W
    double Q0 = 0.0;  // var
    double np = 0.0;
    double nq = 0.0;
    double V0 = 0.0;  // V

    void validate() const;
    bool operator==(const ExpParams&) const = default;
};

struct LoadModel {
    std::variant<ZipParams, ExpParams> params;
    // Lumped line-leg capacitance of a lone-standing node; unused at DGU nodes.
    double C = 0.0;
    // Amplitudes at or below this are outside the model's domain.
    double eps_volt = 20.0;

    bool is_zip() const { return std::holds_alternative<ZipParams>(params); }
    const ZipParams& zip() const { return std::get<ZipParams>(params); }
    const ExpParams& exp() const { return std::get<ExpParams>(params); }
    // Every ZIP coefficient, or P0 and Q0, multiplied by factor.
    LoadModel scaled(double factor) const;
    void validate() const;
    bool operator==(const LoadModel&) const = default;
};

struct DguParams {
    double Rt = 0.0;  // ohm
    double Lt = 0.0;  // H
    double Ct = 0.0;  // F
    double omega0 = 0.0;  // rad/s
    std::optional<LoadModel> local_load;

    void validate() const;
    bool operator==(const DguParams&) const = default;
};

struct LineParams {
    double r_per_km = 0.0;  // ohm/km
    double l_per_km = 0.0;  // H/km
    double c_per_km = 0.0;  // F/km
    double length = 0.0;  // km
    // Zero-sequence data kept with the record; the balanced dq model never reads it.
    std::optional<std::array<double, 3>> zero_sequence;

    double resistance() const { return r_per_km * length; }
    double inductance() const { return l_per_km * length; }
    double capacitance() const { return c_per_km * length; }
    void validate() const;
    bool operator==(const LineParams&) const = default;
};

// States [L I_d, L I_q, C V_d, C V_q]; u is the VSI voltage, d the coupling current.
LinearIsoPhs build_dgu_phs(const DguParams& p);

// Current drawn by the load at node voltage V (dq, volts).
Vec2 load_current(const LoadModel& load, const Vec2& V);

// States [C V_d, C V_q]; the static sink is subtracted by the caller.
LinearIsoPhs build_load_node_phs(double C, double omega0);

// States [L I_d, L I_q]; d = [V_from; V_to], z = [I; -I].
LinearIsoPhs build_line_phs(const LineParams& p, double omega0);

// Half of every incident line capacitance, per node.
std::vector<double> effective_capacitances(const MicrogridGraph& graph);

}  // namespace phmg
