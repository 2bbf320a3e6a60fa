#pragma once

#include "phmg/components.hpp"
#include "phmg/types.hpp"

#include <optional>

namespace phmg {

struct IdaPbcGains {
    double alpha11 = -5.0, alpha22 = -5.0;
    double nu11 = 1.0, nu22 = 1.0;
    double kI1 = 100.0, kI2 = 100.0;  // 1/s

    void validate() const;
    bool operator==(const IdaPbcGains&) const = default;
};

// How the voltage-feedback block is formed from K_P.
enum class PiVoltageGain {
    as_printed,  // (K_P L_t + 1) I
    passive,     // (1 - K_P L_t) I
};

struct PiTuning {
    double KP = 0.0;
    double KI = 0.0;
    PiVoltageGain form = PiVoltageGain::passive;
    bool operator==(const PiTuning&) const = default;
};

// u = K11 V + K12 I + K13 v
struct PiGains {
    Mat2 K11 = Mat2::Zero();
    Mat2 K12 = Mat2::Zero();
    Mat2 K13 = Mat2::Zero();
    // Present when the blocks were derived from scalar gains.
    std::optional<PiTuning> tuning;

    bool operator==(const PiGains&) const = default;
};

// Storage certificate blkdiag(I/C, P22) over [C V; L I; v] for a PI-controlled DGU.
struct PiCertificate {
    Mat4 P22 = Mat4::Zero();
    double p_v = 0.0;
    double lambda_max = 0.0;  // largest eigenvalue of F^T P + P F
    double scale = 0.0;       // largest entry magnitude of F^T P + P F
    bool certified = false;
};

struct VoltageReference {
    double Vd = 0.0;
    double Vq = 0.0;

    Vec2 vec() const { return {Vd, Vq}; }
    void validate() const;
    bool operator==(const VoltageReference&) const = default;
};

// IDA-PBC: integral of (V - V*). PI: integral of (V* - V).
struct ControllerState {
    Vec2 integ = Vec2::Zero();
};

struct SaturationLimits {
    double Vd_sat = 0.0;
    double Vq_sat = 0.0;

    void validate() const;
    bool operator==(const SaturationLimits&) const = default;
};

struct SaturatedCommand {
    Vec2 u;
    bool saturated = false;
};

enum class ControllerKind { ida_pbc, pi, none };

struct ControllerConfig {
    ControllerKind kind = ControllerKind::ida_pbc;
    IdaPbcGains ida;
    PiGains pi;
    VoltageReference ref;
    std::optional<SaturationLimits> sat;

    bool operator==(const ControllerConfig&) const = default;
};

// Co-states of a DGU as the controller measures them.
struct DguMeasurement {
    Vec2 I;  // filter current, A
    Vec2 V;  // node voltage, V
};

DguMeasurement measure(const DguParams& plant, const Vec4& x);

Vec2 ida_pbc_output(const IdaPbcGains& g, const DguParams& nominal, const DguMeasurement& m,
                    const VoltageReference& ref, const ControllerState& cs);
Vec2 ida_pbc_output(const IdaPbcGains& g, const DguParams& plant, const Vec4& x,
                    const VoltageReference& ref, const ControllerState& cs);

Vec2 ida_integrator_derivative(const Vec2& V, const VoltageReference& ref);
Vec2 ida_integrator_derivative(const Vec4& x, const VoltageReference& ref, const DguParams& plant);

Vec2 pi_output(const PiGains& g, const DguMeasurement& m, const ControllerState& cs);
Vec2 pi_output(const PiGains& g, const DguParams& plant, const Vec4& x, const ControllerState& cs);

Vec2 pi_integrator_derivative(const VoltageReference& ref, const Vec2& z);

SaturatedCommand saturate(const Vec2& u, const SaturationLimits& lim);

// [L(-w C Vq* + I_Zd), L(w C Vd* + I_Zq), C Vd*, C Vq*]
Vec4 closed_loop_dgu_equilibrium(const VoltageReference& ref, const Vec2& I_Z_bar, const DguParams& plant);

PiGains pi_gains_from_tuning(const PiTuning& t, const DguParams& nominal);

// Shifted closed loop over [C V; L I; v]: x' = F x + [I; 0; 0] d.
Eigen::Matrix<double, 6, 6> pi_closed_loop_matrix(const PiGains& g, const DguParams& nominal);

// Scans p_v on a log grid over [1e-6, 1e6] and refines the best point.
PiCertificate certify_pi_gains(const PiGains& g, const DguParams& nominal);

}  // namespace phmg
