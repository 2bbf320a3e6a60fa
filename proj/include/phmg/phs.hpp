#pragma once

#include "phmg/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace phmg {

// x' = (J - R) Q x + G u + K d,  y = G^T Q x,  z = K^T Q x,  H = x^T Q x / 2.
struct LinearIsoPhs {
    Mat J;
    Mat R;
    Mat G;
    Mat K;
    Mat Q;

    Eigen::Index n() const { return Q.rows(); }
    Eigen::Index m_u() const { return G.cols(); }
    Eigen::Index m_d() const { return K.cols(); }
};

struct QuadraticHamiltonian {
    Mat Q;
    std::optional<Vec> x_ref;

    double operator()(const Vec& x) const;
    Vec gradient(const Vec& x) const;
};

struct Violation {
    std::string matrix;
    std::string detail;
    double value = 0.0;
};

using ValidityReport = std::vector<Violation>;

// Relative eigenvalue tolerance for the PSD and PD checks.
inline constexpr double kEigenTolerance = 1e-12;

// Throws DimensionError when the matrices are not dimension-consistent.
ValidityReport validate_phs(const LinearIsoPhs& phs);

Vec costate(const Mat& Q, const Vec& x);
Vec costate(const Mat& Q, const Vec& x, const Vec& x_ref);

Vec phs_derivative(const LinearIsoPhs& phs, const Vec& x, const Vec& u, const Vec& d);

struct PhsOutputs {
    Vec y;
    Vec z;
};
PhsOutputs phs_outputs(const LinearIsoPhs& phs, const Vec& x);

// (d - d_ref)^T (z - z_ref)
double supply_rate(const Vec& z, const Vec& d, const Vec& z_ref, const Vec& d_ref);

}  // namespace phmg
