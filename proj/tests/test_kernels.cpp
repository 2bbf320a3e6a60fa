#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "phmg/kernels.hpp"

#include <random>

using namespace phmg;
using namespace phmg::test;
using Catch::Approx;

TEST_CASE("finite-difference Jacobian of a linear map is exact", "[kernels]") {
    std::mt19937_64 rng(53);
    const Mat A = Mat::NullaryExpr(7, 5, [&] { return std::uniform_real_distribution<double>(-3.0, 3.0)(rng); });
    const FieldFn f = [&A](const Vec& x, Vec& out) { out = A * x; };
    const Vec x = random_vec(rng, 5);
    const std::vector<int> cols = {0, 2, 4};
    const Mat J = fd_jacobian_serial(f, x, cols, Vec::Ones(5));
    REQUIRE(J.rows() == 7);
    REQUIRE(J.cols() == 3);
    for (std::size_t c = 0; c < cols.size(); ++c) CHECK((J.col(c) - A.col(cols[c])).norm() <= 1e-8 * A.col(cols[c]).norm());
}

TEST_CASE("central differences are exact on quadratics", "[kernels]") {
    const FieldFn f = [](const Vec& x, Vec& out) {
        out.resize(2);
        out << x[0] * x[0] + 3.0 * x[0] * x[1], 2.0 * x[1] * x[1];
    };
    const Vec x = Vec2(1.5, -2.0);
    const Mat J = fd_jacobian_serial(f, x, {0, 1}, Vec::Ones(2), 1e-4);
    CHECK(J(0, 0) == Approx(2.0 * 1.5 + 3.0 * -2.0));
    CHECK(J(0, 1) == Approx(3.0 * 1.5));
    CHECK(J(1, 0) == Approx(0.0).margin(1e-9));
    CHECK(J(1, 1) == Approx(4.0 * -2.0));
}

TEST_CASE("serial and parallel Jacobians agree exactly on the network field", "[kernels]") {
    const auto g = load_scenario("cigre-feeder1").graph;
    const NetworkModel m(g, ModelConfig::from_graph(*g, ActiveSet::all(*g)));
    const FieldFn f = [&m](const Vec& x, Vec& out) { m.derivative(x, out); };
    Vec x = m.default_initial_state();
    std::mt19937_64 rng(59);
    x += 1e-3 * random_vec(rng, x.size()).cwiseProduct(m.state_scales());
    const Mat a = fd_jacobian_serial(f, x, m.free_states(), m.state_scales(), 1e-7);
    const Mat b = fd_jacobian_parallel(f, x, m.free_states(), m.state_scales(), 1e-7);
    CHECK(a == b);
    CHECK(fd_jacobian(f, x, m.free_states(), m.state_scales(), 1e-7, Exec::parallel) == a);
}

TEST_CASE("parallel Jacobian propagates evaluation failures", "[kernels]") {
    const FieldFn f = [](const Vec& x, Vec& out) {
        if (x[1] > 1.0) throw SolverError("outside");
        out = x;
    };
    CHECK_THROWS_AS(fd_jacobian_parallel(f, Vec2(0.0, 1.0), {0, 1}, Vec::Ones(2), 1e-3), SolverError);
}

TEST_CASE("probe kernels agree and are reproducible", "[kernels]") {
    const LoadModel l{load1()};
    const AmplitudeRange r{0.9 * kV0, 1.1 * kV0};
    for (const std::size_t n : {std::size_t{1}, std::size_t{1023}, std::size_t{5000}, std::size_t{10000}}) {
        const ProbeSummary a = probe_pairs_serial(l, r, n, 42);
        const ProbeSummary b = probe_pairs_parallel(l, r, n, 42);
        CHECK(a.samples == n);
        CHECK(a.nonpositive == b.nonpositive);
        CHECK(a.min_value == b.min_value);
        CHECK(a.V1_at_min == b.V1_at_min);
        CHECK(a.V2_at_min == b.V2_at_min);
    }
    CHECK(probe_pairs_serial(l, r, 2000, 1).min_value == probe_pairs_serial(l, r, 2000, 1).min_value);
    CHECK(probe_pairs_serial(l, r, 2000, 1).min_value != probe_pairs_serial(l, r, 2000, 2).min_value);
}

TEST_CASE("probe samples stay inside the amplitude range", "[kernels]") {
    const LoadModel l{load9()};
    const AmplitudeRange r{15000.0, 16000.0};
    const ProbeSummary s = probe_pairs_serial(l, r, 3000, 7);
    CHECK(s.V1_at_min.norm() >= 15000.0 - 1e-9);
    CHECK(s.V1_at_min.norm() <= 16000.0 + 1e-9);
    CHECK(s.min_value == Approx(monotonicity_probe(l, s.V1_at_min, s.V2_at_min)));
    CHECK_THROWS_AS(probe_pairs_parallel(l, AmplitudeRange{0.0, 1.0}, 10, 1), ValidationError);
}
