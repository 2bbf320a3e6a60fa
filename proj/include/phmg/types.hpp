#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace phmg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;

// Exit status of the command-line tool maps one-to-one onto these.
enum class ErrorCategory { validation = 1, solver = 2, certification = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}
    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorCategory::validation, what) {}
};

// Matrix or vector sizes do not agree; distinct from an invariant violation.
class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SolverError : public Error {
public:
    explicit SolverError(const std::string& what) : Error(ErrorCategory::solver, what) {}
};

// A load was evaluated at an amplitude below its validity threshold.
class SingularVoltageError : public SolverError {
public:
    SingularVoltageError(const std::string& what, double amplitude)
        : SolverError(what), amplitude_(amplitude) {}
    double amplitude() const noexcept { return amplitude_; }

private:
    double amplitude_;
};

class CertificationError : public Error {
public:
    explicit CertificationError(const std::string& what) : Error(ErrorCategory::certification, what) {}
};

inline const char* category_name(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::solver: return "solver";
    case ErrorCategory::certification: return "certification";
    }
    return "unknown";
}

// Rotation by -90 degrees in the dq plane: (a, b) -> (b, -a).
inline Mat2 dq_rotation() {
    Mat2 m;
    m << 0.0, 1.0, -1.0, 0.0;
    return m;
}

}  // namespace phmg
