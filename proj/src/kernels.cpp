#include "phmg/kernels.hpp"

#include "phmg/eip.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>

namespace phmg {

namespace {

double column_step(const Vec& x, const Vec& scale, int j, double rel_step) {
    return rel_step * std::max(std::abs(x[j]), scale[j]);
}

void fd_column(const FieldFn& f, Vec& xw, int j, double h, Vec& fp, Vec& fm, Eigen::Ref<Vec> out) {
    const double xj = xw[j];
    xw[j] = xj + h;
    f(xw, fp);
    xw[j] = xj - h;
    f(xw, fm);
    xw[j] = xj;
    out = (fp - fm) / (2.0 * h);
}

constexpr std::size_t kProbeBlock = 1024;

struct BlockResult {
    std::size_t nonpositive = 0;
    double min_value = std::numeric_limits<double>::infinity();
    Vec2 V1 = Vec2::Zero();
    Vec2 V2 = Vec2::Zero();
};

BlockResult probe_block(const LoadModel& load, AmplitudeRange range, std::size_t first, std::size_t count,
                        std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(first / kProbeBlock)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> amp(range.lo, range.hi);
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
    BlockResult r;
    for (std::size_t i = 0; i < count; ++i) {
        const double a1 = amp(rng), t1 = ang(rng), a2 = amp(rng), t2 = ang(rng);
        const Vec2 V1(a1 * std::cos(t1), a1 * std::sin(t1));
        const Vec2 V2(a2 * std::cos(t2), a2 * std::sin(t2));
        const double p = monotonicity_probe(load, V1, V2);
        if (!(p > 0.0)) ++r.nonpositive;
        if (p < r.min_value) {
            r.min_value = p;
            r.V1 = V1;
            r.V2 = V2;
        }
    }
    return r;
}

ProbeSummary merge(const std::vector<BlockResult>& blocks, std::size_t n) {
    ProbeSummary s;
    s.samples = n;
    s.min_value = std::numeric_limits<double>::infinity();
    for (const auto& b : blocks) {
        s.nonpositive += b.nonpositive;
        if (b.min_value < s.min_value) {
            s.min_value = b.min_value;
            s.V1_at_min = b.V1;
            s.V2_at_min = b.V2;
        }
    }
    return s;
}

void check_range(AmplitudeRange range) {
    if (!(range.lo > 0.0 && range.hi >= range.lo)) throw ValidationError("amplitude range must satisfy 0 < lo <= hi");
}

}  // namespace

Mat fd_jacobian_serial(const FieldFn& f, const Vec& x, const std::vector<int>& cols, const Vec& scale,
                       double rel_step) {
    Vec xw = x;
    Vec f0;
    f(x, f0);
    Mat Jm(f0.size(), static_cast<Eigen::Index>(cols.size()));
    Vec fp(f0.size()), fm(f0.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const int j = cols[c];
        fd_column(f, xw, j, column_step(x, scale, j, rel_step), fp, fm, Jm.col(static_cast<Eigen::Index>(c)));
    }
    return Jm;
}

Mat fd_jacobian_parallel(const FieldFn& f, const Vec& x, const std::vector<int>& cols, const Vec& scale,
                         double rel_step) {
    Vec f0;
    f(x, f0);
    Mat Jm(f0.size(), static_cast<Eigen::Index>(cols.size()));
    const long nc = static_cast<long>(cols.size());
    std::exception_ptr failure;
    std::mutex failure_mutex;
#pragma omp parallel
    {
        Vec xw = x;
        Vec fp(f0.size()), fm(f0.size());
#pragma omp for schedule(static)
        for (long c = 0; c < nc; ++c) {
            const int j = cols[c];
            try {
                fd_column(f, xw, j, column_step(x, scale, j, rel_step), fp, fm, Jm.col(c));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    return Jm;
}

ProbeSummary probe_pairs_serial(const LoadModel& load, AmplitudeRange range, std::size_t n, std::uint64_t seed) {
    check_range(range);
    const std::size_t nb = (n + kProbeBlock - 1) / kProbeBlock;
    std::vector<BlockResult> blocks(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t first = b * kProbeBlock;
        blocks[b] = probe_block(load, range, first, std::min(kProbeBlock, n - first), seed);
    }
    return merge(blocks, n);
}

ProbeSummary probe_pairs_parallel(const LoadModel& load, AmplitudeRange range, std::size_t n, std::uint64_t seed) {
    check_range(range);
    const long nb = static_cast<long>((n + kProbeBlock - 1) / kProbeBlock);
    std::vector<BlockResult> blocks(static_cast<std::size_t>(nb));
    std::exception_ptr failure;
    std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic)
    for (long b = 0; b < nb; ++b) {
        const std::size_t first = static_cast<std::size_t>(b) * kProbeBlock;
        try {
            blocks[static_cast<std::size_t>(b)] = probe_block(load, range, first, std::min(kProbeBlock, n - first), seed);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return merge(blocks, n);
}

}  // namespace phmg
