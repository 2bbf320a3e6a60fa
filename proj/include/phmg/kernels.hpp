#pragma once

#include "phmg/model.hpp"
#include "phmg/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace phmg {

// Writes f(x) into fx. Must be safe to call concurrently.
using FieldFn = std::function<void(const Vec& x, Vec& fx)>;

// Central differences over the listed columns; rows are all of f.
// Column j uses the step rel_step * max(|x_j|, scale_j).
Mat fd_jacobian_serial(const FieldFn& f, const Vec& x, const std::vector<int>& cols, const Vec& scale,
                       double rel_step = 1e-6);
Mat fd_jacobian_parallel(const FieldFn& f, const Vec& x, const std::vector<int>& cols, const Vec& scale,
                         double rel_step = 1e-6);

inline Mat fd_jacobian(const FieldFn& f, const Vec& x, const std::vector<int>& cols, const Vec& scale,
                       double rel_step, Exec exec) {
    return exec == Exec::parallel ? fd_jacobian_parallel(f, x, cols, scale, rel_step)
                                  : fd_jacobian_serial(f, x, cols, scale, rel_step);
}

struct AmplitudeRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct ProbeSummary {
    std::size_t samples = 0;
    std::size_t nonpositive = 0;
    double min_value = 0.0;
    Vec2 V1_at_min = Vec2::Zero();
    Vec2 V2_at_min = Vec2::Zero();
};

// Random voltage pairs with amplitudes uniform in the range and uniform angles.
// Sample i depends only on (seed, i), so both kernels return identical summaries.
ProbeSummary probe_pairs_serial(const LoadModel& load, AmplitudeRange range, std::size_t n, std::uint64_t seed);
ProbeSummary probe_pairs_parallel(const LoadModel& load, AmplitudeRange range, std::size_t n, std::uint64_t seed);

}  // namespace phmg
