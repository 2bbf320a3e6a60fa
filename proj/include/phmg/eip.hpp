#pragma once

#include "phmg/kernels.hpp"
#include "phmg/model.hpp"
#include "phmg/phs.hpp"

#include <optional>
#include <string>
#include <vector>

namespace phmg {

struct Trajectory;

enum class EipClass { strictly_eip, eip, not_certified };

const char* to_string(EipClass c);

// Condition values at the amplitude with the smallest relative margin.
struct EipWitness {
    double v_hat = 0.0;
    double a_lhs = 0.0;     // first condition, compared against zero
    double b_lhs = 0.0;     // second condition, left side
    double b_rhs = 0.0;     // second condition, right side
    double iq_term = 0.0;   // I_q V^2 / 4 as it enters b_rhs
    double iq_squared_term = 0.0;  // I_q^2 V^2 / 4, the dimensionally clean alternative
    double margin = 0.0;    // min over the checked set of (b_lhs - b_rhs) / max(|b_lhs|, |b_rhs|)
    std::size_t checked = 0;
};

struct EipVerdict {
    EipClass cls = EipClass::not_certified;
    EipWitness witness;
    std::string detail;
};

struct AmplitudeGrid {
    AmplitudeRange range;
    int points = 101;  // log-spaced, endpoints included
};

EipVerdict check_zip_eip(const ZipParams& p, double v_hat);
EipVerdict check_zip_eip(const ZipParams& p, const AmplitudeGrid& grid);
EipVerdict check_exp_eip(const ExpParams& p, double v_hat);
EipVerdict check_exp_eip(const ExpParams& p, const AmplitudeGrid& grid);
EipVerdict check_load_eip(const LoadModel& load, const AmplitudeGrid& grid);

// (V1 - V2)^T (I(V1) - I(V2))
double monotonicity_probe(const LoadModel& load, const Vec2& V1, const Vec2& V2);

// Q > 0 and R >= 0 give EIP; R > 0 gives strict EIP.
EipVerdict lti_phs_eip_class(const LinearIsoPhs& phs);

struct NetworkEquilibrium {
    Vec x;
    Vec z;
    Vec d;
    double residual = 0.0;  // infinity norm of the scaled residual over free states
    double max_reference_error = 0.0;  // volts, over connected controlled DGUs
    int iterations = 0;
    ModelConfig config;
};

struct NewtonSettings {
    int max_iterations = 50;
    double tolerance = 1e-8;
    double fd_step = 1e-6;
    Exec exec = Exec::serial;
};

// Node voltages at the mean reference, closed-form DGU currents for zero load, lines and integrators at zero.
Vec flat_start(const NetworkModel& m);

NetworkEquilibrium solve_equilibrium(const NetworkModel& m, const std::optional<Vec>& warm = std::nullopt,
                                     const NewtonSettings& s = {});

// Sum of shifted storages of every active subsystem about an equilibrium.
class CompositeStorage {
public:
    CompositeStorage(const NetworkModel& m, const NetworkEquilibrium& eq);
    double operator()(const Vec& x) const;

private:
    const NetworkModel* model_;
    Vec xbar_;
    std::vector<std::optional<Mat4>> pi_P22_;
};

struct LyapunovSeries {
    std::vector<double> t;
    std::vector<double> H;
    std::vector<double> dH;
    double max_relative_increase = 0.0;  // max dH / H(first sample)
    std::size_t violations = 0;
    bool non_increasing = true;
};

// Samples [first, last] must not straddle an event and must use the equilibrium's configuration.
LyapunovSeries lyapunov_monitor(const Trajectory& traj, std::size_t first, std::size_t last,
                                const NetworkEquilibrium& eq, double tolerance = 1e-6);
LyapunovSeries lyapunov_monitor(const Trajectory& traj, std::size_t segment, double tolerance = 1e-6);

}  // namespace phmg
