#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "phmg/phs.hpp"

#include <random>

using namespace phmg;
using namespace phmg::test;
using Catch::Approx;

namespace {

// Central-difference gradient of x -> x^T Q x / 2, step 1e-6 * |x|.
Vec fd_gradient(const Mat& Q, const Vec& x) {
    const QuadraticHamiltonian H{Q, std::nullopt};
    const double h = 1e-6 * x.norm();
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec p = x, m = x;
        p[i] += h;
        m[i] -= h;
        g[i] = (H(p) - H(m)) / (2.0 * h);
    }
    return g;
}

Mat dgu_Q() {
    Vec q(4);
    q << 1.0 / 1.8e-3, 1.0 / 1.8e-3, 1.0 / 25e-6, 1.0 / 25e-6;
    return q.asDiagonal();
}

}  // namespace

TEST_CASE("validate_phs accepts constructed models", "[phs]") {
    CHECK(validate_phs(build_dgu_phs(filter())).empty());
    CHECK(validate_phs(build_line_phs(cable(2.8), kOmega0)).empty());
    CHECK(validate_phs(build_load_node_phs(546.12e-9, kOmega0)).empty());
}

TEST_CASE("validate_phs names a negative dissipation", "[phs]") {
    LinearIsoPhs p = build_dgu_phs(filter());
    p.R = Vec4(-0.1, -0.1, 0.0, 0.0).asDiagonal();
    const auto rep = validate_phs(p);
    REQUIRE(rep.size() == 1);
    CHECK(rep[0].matrix == "R");
    CHECK(rep[0].value == Approx(-0.1));
}

TEST_CASE("validate_phs reports a non-skew J and a singular Q", "[phs]") {
    LinearIsoPhs p = build_dgu_phs(filter());
    p.J(0, 1) += 1e-3;
    p.Q(3, 3) = 0.0;
    const auto rep = validate_phs(p);
    bool saw_j = false, saw_q = false;
    for (const auto& v : rep) {
        saw_j = saw_j || v.matrix == "J";
        saw_q = saw_q || v.matrix == "Q";
    }
    CHECK(saw_j);
    CHECK(saw_q);
}

TEST_CASE("dimension mismatch is rejected, not reported", "[phs]") {
    LinearIsoPhs p = build_dgu_phs(filter());
    p.R = Mat::Zero(3, 3);
    CHECK_THROWS_AS(validate_phs(p), DimensionError);
    const LinearIsoPhs q = build_dgu_phs(filter());
    CHECK_THROWS_AS(phs_derivative(q, Vec::Zero(3), Vec::Zero(2), Vec::Zero(2)), DimensionError);
    CHECK_THROWS_AS(costate(dgu_Q(), Vec::Zero(5)), DimensionError);
    CHECK_THROWS_AS(supply_rate(Vec::Zero(2), Vec::Zero(3), Vec::Zero(2), Vec::Zero(3)), DimensionError);
}

TEST_CASE("costate undoes the storage scaling", "[phs]") {
    Vec x(4);
    x << 1.8e-3 * 10.0, 1.8e-3 * -5.0, 25e-6 * 18000.0, 25e-6 * 11000.0;
    const Vec e = costate(dgu_Q(), x);
    CHECK(e[0] == Approx(10.0));
    CHECK(e[1] == Approx(-5.0));
    CHECK(e[2] == Approx(18000.0));
    CHECK(e[3] == Approx(11000.0));
    CHECK(costate(dgu_Q(), x, x).norm() == 0.0);
}

TEST_CASE("costate matches the finite-difference gradient", "[phs][property]") {
    std::mt19937_64 rng(7);
    const Mat Q = dgu_Q();
    for (int k = 0; k < 50; ++k) {
        const Vec x = random_vec(rng, 4, 0.5);
        const Vec e = costate(Q, x);
        const Vec g = fd_gradient(Q, x);
        CHECK((e - g).norm() <= 1e-6 * e.norm());
    }
}

TEST_CASE("shifted Hamiltonian vanishes only at the shift point", "[phs][property]") {
    std::mt19937_64 rng(11);
    const Vec ref = random_vec(rng, 4, 0.1);
    const QuadraticHamiltonian H{dgu_Q(), ref};
    CHECK(H(ref) == 0.0);
    for (int k = 0; k < 50; ++k) {
        const Vec x = ref + random_vec(rng, 4, 1e-3);
        CHECK(H(x) > 0.0);
        CHECK((H.gradient(x) - dgu_Q() * (x - ref)).norm() == 0.0);
    }
}

TEST_CASE("phs_derivative is zero at the origin", "[phs]") {
    const LinearIsoPhs p = build_dgu_phs(filter());
    CHECK(phs_derivative(p, Vec::Zero(4), Vec::Zero(2), Vec::Zero(2)).norm() == 0.0);
}

TEST_CASE("energy balance along phs_derivative", "[phs][property]") {
    std::mt19937_64 rng(3);
    const LinearIsoPhs p = build_dgu_phs(filter());
    for (int k = 0; k < 100; ++k) {
        Vec x(4);
        x << random_vec(rng, 2, 1.8e-3 * 200.0), random_vec(rng, 2, 25e-6 * 20000.0);
        const Vec u = random_vec(rng, 2, 20000.0);
        const Vec d = random_vec(rng, 2, 200.0);
        const Vec e = costate(p.Q, x);
        const PhsOutputs o = phs_outputs(p, x);
        const double lhs = e.dot(phs_derivative(p, x, u, d));
        const double diss = e.dot(p.R * e);
        const double rhs = -diss + o.y.dot(u) + o.z.dot(d);
        const double mag = std::abs(diss) + std::abs(o.y.dot(u)) + std::abs(o.z.dot(d));
        CHECK(std::abs(lhs - rhs) <= 1e-10 * mag);
    }
}

TEST_CASE("supply_rate is the shifted dot product", "[phs]") {
    const Vec zero = Vec::Zero(2);
    CHECK(supply_rate(Vec2(3.0, -1.0), Vec2(1.0, 2.0), zero, zero) == 1.0);
    CHECK(supply_rate(Vec2(3.0, -1.0), Vec2(1.0, 2.0), Vec2(3.0, -1.0), zero) == 0.0);
    CHECK(supply_rate(Vec2(3.0, -1.0), Vec2(1.0, 2.0), zero, Vec2(1.0, 2.0)) == 0.0);
    CHECK(supply_rate(Vec2(4.0, 0.0), Vec2(2.0, 5.0), Vec2(1.0, 1.0), Vec2(1.0, 3.0)) == Approx(1.0 * 3.0 + 2.0 * -1.0));
}
