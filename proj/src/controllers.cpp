#include "phmg/controllers.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace phmg {

void IdaPbcGains::validate() const {
    if (!(alpha11 < 0.0 && alpha22 < 0.0)) throw ValidationError("IDA-PBC alpha gains must be negative");
    if (!(nu11 > 0.0 && nu22 > 0.0)) throw ValidationError("IDA-PBC nu gains must be positive");
    if (!(kI1 > 0.0 && kI2 > 0.0)) throw ValidationError("IDA-PBC integral gains must be positive");
}

void VoltageReference::validate() const {
    if (!std::isfinite(Vd) || !std::isfinite(Vq)) throw ValidationError("voltage reference must be finite");
    if (Vd == 0.0 && Vq == 0.0) throw ValidationError("voltage reference must be nonzero");
}

void SaturationLimits::validate() const {
    if (!(Vd_sat > 0.0 && Vq_sat > 0.0)) throw ValidationError("saturation limits must be positive");
}

DguMeasurement measure(const DguParams& plant, const Vec4& x) {
    return {Vec2(x[0] / plant.Lt, x[1] / plant.Lt), Vec2(x[2] / plant.Ct, x[3] / plant.Ct)};
}

Vec2 ida_pbc_output(const IdaPbcGains& g, const DguParams& nominal, const DguMeasurement& m,
                    const VoltageReference& ref, const ControllerState& cs) {
    const double w = nominal.omega0;
    const double R = nominal.Rt;
    const double L = nominal.Lt;
    const double C = nominal.Ct;
    const double id = m.I[0], iq = m.I[1];
    const double vd = m.V[0], vq = m.V[1];
    const double ud = g.alpha11 / g.nu11 * (id + w * C * ref.Vq) - g.nu11 * (vd - ref.Vd) + R * id - w * L * iq + vd
                      + g.alpha11 * g.kI1 * cs.integ[0] + g.kI1 * L * (ref.Vd - vd);
    const double uq = g.alpha22 / g.nu22 * (iq - w * C * ref.Vd) - g.nu22 * (vq - ref.Vq) + R * iq + w * L * id + vq
                      + g.alpha22 * g.kI2 * cs.integ[1] + g.kI2 * L * (ref.Vq - vq);
    return {ud, uq};
}

Vec2 ida_pbc_output(const IdaPbcGains& g, const DguParams& plant, const Vec4& x,
                    const VoltageReference& ref, const ControllerState& cs) {
    return ida_pbc_output(g, plant, measure(plant, x), ref, cs);
}

Vec2 ida_integrator_derivative(const Vec2& V, const VoltageReference& ref) {
    return V - ref.vec();
}

Vec2 ida_integrator_derivative(const Vec4& x, const VoltageReference& ref, const DguParams& plant) {
    return ida_integrator_derivative(measure(plant, x).V, ref);
}

Vec2 pi_output(const PiGains& g, const DguMeasurement& m, const ControllerState& cs) {
    return g.K11 * m.V + g.K12 * m.I + g.K13 * cs.integ;
}

Vec2 pi_output(const PiGains& g, const DguParams& plant, const Vec4& x, const ControllerState& cs) {
    return pi_output(g, measure(plant, x), cs);
}

Vec2 pi_integrator_derivative(const VoltageReference& ref, const Vec2& z) {
    return ref.vec() - z;
}

SaturatedCommand saturate(const Vec2& u, const SaturationLimits& lim) {
    const Vec2 c(std::clamp(u[0], -lim.Vd_sat, lim.Vd_sat), std::clamp(u[1], -lim.Vq_sat, lim.Vq_sat));
    return {c, c[0] != u[0] || c[1] != u[1]};
}

Vec4 closed_loop_dgu_equilibrium(const VoltageReference& ref, const Vec2& I_Z_bar, const DguParams& plant) {
    const double w = plant.omega0;
    return {plant.Lt * (-w * plant.Ct * ref.Vq + I_Z_bar[0]),
            plant.Lt * (w * plant.Ct * ref.Vd + I_Z_bar[1]),
            plant.Ct * ref.Vd,
            plant.Ct * ref.Vq};
}

PiGains pi_gains_from_tuning(const PiTuning& t, const DguParams& nominal) {
    if (!(t.KP > 0.0 && t.KI > 0.0)) throw ValidationError("PI gains K_P and K_I must be positive");
    const double R = nominal.Rt;
    const double L = nominal.Lt;
    const double w = nominal.omega0;
    PiGains g;
    const double k11 = t.form == PiVoltageGain::as_printed ? t.KP * L + 1.0 : 1.0 - t.KP * L;
    g.K11 = k11 * Mat2::Identity();
    g.K13 = t.KI * Mat2::Identity();
    Mat2 base;
    base << R, -2.0 * w * L, 2.0 * w * L, R;
    g.K12 = base - g.K13 * (1.0 / t.KP + 1.0);
    g.tuning = t;
    return g;
}

Eigen::Matrix<double, 6, 6> pi_closed_loop_matrix(const PiGains& g, const DguParams& nominal) {
    const double w = nominal.omega0;
    const double L = nominal.Lt;
    const double C = nominal.Ct;
    const Mat2 I2 = Mat2::Identity();
    Mat2 a22;
    a22 << -nominal.Rt / L, w, -w, -nominal.Rt / L;
    Eigen::Matrix<double, 6, 6> F = Eigen::Matrix<double, 6, 6>::Zero();
    F.block<2, 2>(0, 0) = w * dq_rotation();
    F.block<2, 2>(0, 2) = I2 / L;
    F.block<2, 2>(2, 0) = -(I2 - g.K11) / C;
    F.block<2, 2>(2, 2) = a22 + g.K12 / L;
    F.block<2, 2>(2, 4) = g.K13;
    F.block<2, 2>(4, 0) = -I2 / C;
    return F;
}

namespace {

using Mat6 = Eigen::Matrix<double, 6, 6>;

struct Candidate {
    bool valid = false;
    Mat4 P22 = Mat4::Zero();
    double lambda = 0.0;
    double scale = 1.0;
    double objective = 0.0;
};

// The voltage rows of F^T P + P F vanish identically for this family.
Candidate evaluate_family(const Mat6& F, const Mat2& K11, double L, double C, double p_v) {
    Candidate c;
    const Mat2 I2 = Mat2::Identity();
    const Mat2 A = I2 - K11;
    if (std::abs(A.determinant()) < 1e-14) return c;
    const Mat2 Ait = A.transpose().inverse();
    const Mat2 Pvv = p_v * I2;
    const Mat2 Piv = -Ait * Pvv;
    const Mat2 Pvi = Piv.transpose();
    const Mat2 Pii = Ait * (I2 / L - Pvi);
    if ((Pii - Pii.transpose()).cwiseAbs().maxCoeff() > 1e-12 * Pii.cwiseAbs().maxCoeff()) return c;
    c.P22.block<2, 2>(0, 0) = 0.5 * (Pii + Pii.transpose());
    c.P22.block<2, 2>(0, 2) = Piv;
    c.P22.block<2, 2>(2, 0) = Pvi;
    c.P22.block<2, 2>(2, 2) = Pvv;
    Eigen::SelfAdjointEigenSolver<Mat4> ep(c.P22, Eigen::EigenvaluesOnly);
    const double pmax = ep.eigenvalues().cwiseAbs().maxCoeff();
    if (!(ep.eigenvalues().minCoeff() > 1e-12 * pmax)) return c;

    Mat6 P = Mat6::Zero();
    P.block<2, 2>(0, 0) = I2 / C;
    P.block<4, 4>(2, 2) = c.P22;
    const Mat6 Qm = F.transpose() * P + P * F;
    Eigen::SelfAdjointEigenSolver<Mat6> eq(0.5 * (Qm + Qm.transpose()), Eigen::EigenvaluesOnly);
    c.lambda = eq.eigenvalues().maxCoeff();
    c.scale = std::max(Qm.cwiseAbs().maxCoeff(), 1e-300);
    c.objective = c.lambda / c.scale;
    c.valid = true;
    return c;
}

}  // namespace

PiCertificate certify_pi_gains(const PiGains& g, const DguParams& nominal) {
    constexpr double kTolerance = 1e-9;
    constexpr int kPointsPerDecade = 20;
    const Mat6 F = pi_closed_loop_matrix(g, nominal);
    const double L = nominal.Lt;
    const double C = nominal.Ct;

    double best_log = 0.0;
    Candidate best;
    for (int i = 0; i <= 12 * kPointsPerDecade; ++i) {
        const double lp = -6.0 + static_cast<double>(i) / kPointsPerDecade;
        const Candidate c = evaluate_family(F, g.K11, L, C, std::pow(10.0, lp));
        if (c.valid && (!best.valid || c.objective < best.objective)) {
            best = c;
            best_log = lp;
        }
    }
    PiCertificate cert;
    if (!best.valid) return cert;

    // Golden-section refinement in log10(p_v) between the grid neighbours.
    const double step = 1.0 / kPointsPerDecade;
    double a = std::max(-6.0, best_log - step);
    double b = std::min(6.0, best_log + step);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    auto score = [&](double lp) {
        const Candidate c = evaluate_family(F, g.K11, L, C, std::pow(10.0, lp));
        return c.valid ? c.objective : std::numeric_limits<double>::infinity();
    };
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = score(x1), f2 = score(x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = score(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = score(x2);
        }
    }
    const double refined = 0.5 * (a + b);
    const Candidate r = evaluate_family(F, g.K11, L, C, std::pow(10.0, refined));
    const Candidate& pick = (r.valid && r.objective < best.objective) ? r : best;
    const double pick_log = (&pick == &r) ? refined : best_log;

    cert.P22 = pick.P22;
    cert.p_v = std::pow(10.0, pick_log);
    cert.lambda_max = pick.lambda;
    cert.scale = pick.scale;
    cert.certified = pick.objective <= kTolerance;
    return cert;
}

}  // namespace phmg
