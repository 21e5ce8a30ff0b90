#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "randers/oracle.hpp"
#include "randers/sweeper.hpp"

using namespace randers;

TEST_CASE("stencil table is the Moore ring") {
    std::set<std::pair<int, int>> seen;
    for (int k = 0; k < StencilTable::kNeighbors; ++k) {
        const auto o = StencilTable::offset(k);
        CHECK(std::max(std::abs(o[0]), std::abs(o[1])) == 1);
        seen.insert({o[0], o[1]});
    }
    CHECK(seen.size() == 8);
    for (int k = 0; k < 8; ++k) {
        const auto a = StencilTable::offset(k);
        const auto b = StencilTable::offset((k + 1) % 8);
        CHECK(a[0] * b[1] - a[1] * b[0] != 0);  // linearly independent pair
    }
}

TEST_CASE("two point update") {
    const Sym2 id = Sym2::identity();
    SUBCASE("symmetric unit stencil") {
        const auto res = two_point_update(0.0, 0.0, {-1, 0}, {0, -1}, id, {0, 0});
        REQUIRE(res.valid);
        CHECK(res.t0 == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
        CHECK(res.lam1 == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
        CHECK(res.lam2 == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    }
    SUBCASE("far donor falls outside the triangle") {
        const auto res = two_point_update(0.0, 10.0, {-1, 0}, {0, -1}, id, {0, 0});
        CHECK_FALSE(res.valid);
    }
    SUBCASE("negative discriminant") {
        const auto res = two_point_update(0.0, 5.0, {-1, 0}, {0, -1}, id, {0, 0});
        CHECK_FALSE(res.valid);
    }
    SUBCASE("degenerate metric scale") {
        // nearly rank-one metric makes E numerically singular
        const auto res = two_point_update(0.0, 0.0, {-1, 0}, {-1, -1e-9}, id, {0, 0});
        CHECK_FALSE(res.valid);
    }
}

TEST_CASE("one point update") {
    const Sym2 id = Sym2::identity();
    CHECK(one_point_update(0.0, {-1, 0}, id, {0, 0}) == doctest::Approx(1.0));
    CHECK(one_point_update(0.0, {-1, 0}, id, {0.3, 0}) == doctest::Approx(0.7));
    CHECK(one_point_update(0.0, {-1, 0}, {4.0, 0.0, 0.25}, {0, 0}) == doctest::Approx(2.0));
}

TEST_CASE("node update cases") {
    const MetricField g(3, 3, 1.0);
    const DriftField b(3, 3);
    Grid2D<double> t(3, 3, kUnreached);

    SUBCASE("axis neighbor of a source") {
        t(1, 1) = 0.0;
        const auto up = node_update(1, 2, t, g, b, 1.0);
        CHECK(up.t0 == doctest::Approx(1.0));
        CHECK(up.type == UpdateType::OnePoint);
    }
    SUBCASE("diagonal source with two axis donors") {
        t(0, 0) = 0.0;
        t(0, 1) = 1.0;
        t(1, 0) = 1.0;
        const auto up = node_update(1, 1, t, g, b, 1.0);
        // the diagonal edge gives the exact distance sqrt(2)
        CHECK(up.t0 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    }
    SUBCASE("no finite donors leaves the node alone") {
        t(1, 1) = 5.0;
        const auto up = node_update(1, 1, t, g, b, 1.0);
        CHECK(up.t0 == 5.0);
        CHECK(up.donor1 == -1);
    }
}

TEST_CASE("isotropic point source accuracy") {
    const int n = 100;
    const GridSpec spec{n, n, 1.0 / n};
    const MetricField g(n, n, 1.0);
    const DriftField b(n, n);
    const SourceMask src = SourceMask::point(n, n, n / 10, n / 10);
    auto [t, report] = solve(g, b, src, spec);
    REQUIRE(report.converged);
    CHECK(report.iterations <= 4);

    const ArrivalField ref = analytic_distance(spec, {{n / 10, n / 10}}, Sym2::identity(), {0, 0});
    double sq = 0, ref_sq = 0;
    for (size_t i = 0; i < t.t.size(); ++i) {
        const double e = t.t[i] - ref.t[i];
        sq += e * e;
        ref_sq += ref.t[i] * ref.t[i];
    }
    const double rel = std::sqrt(sq / ref_sq);
    CHECK(rel <= 0.005);  // paper-scale accuracy for this resolution
}

TEST_CASE("three sources match the minimum distance field") {
    const int n = 400;
    const GridSpec spec{n, n, 1.0 / n};
    const MetricField g(n, n, 1.0);
    const DriftField b(n, n);
    SourceMask src(n, n);
    const std::vector<std::pair<int, int>> pts = {{n / 4, n / 4}, {n / 4, 3 * n / 4},
                                                  {3 * n / 4, n / 2}};
    for (auto [r, c] : pts) src.mask(r, c) = 1;
    auto [t, report] = solve(g, b, src, spec);
    REQUIRE(report.converged);

    const ArrivalField ref = analytic_distance(spec, pts, Sym2::identity(), {0, 0});
    double sq = 0, ref_sq = 0;
    for (size_t i = 0; i < t.t.size(); ++i) {
        const double e = t.t[i] - ref.t[i];
        sq += e * e;
        ref_sq += ref.t[i] * ref.t[i];
    }
    CHECK(std::sqrt(sq / ref_sq) <= 0.0035);
}

TEST_CASE("constant drift asymmetry") {
    const int n = 81;
    const GridSpec spec{n, n, 1.0};
    const MetricField g(n, n, 1.0);
    const DriftField b(n, n, 0.3, 0.0);
    const SourceMask src = SourceMask::point(n, n, 40, 40);
    auto [t, report] = solve(g, b, src, spec);
    REQUIRE(report.converged);
    CHECK(t.t(40, 70) == doctest::Approx(21.0).epsilon(0.5 / 21.0));
    CHECK(t.t(40, 10) == doctest::Approx(39.0).epsilon(0.5 / 39.0));
}

TEST_CASE("sweeping stays within the Dijkstra upper bound") {
    for (uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        const int n = 12;
        const GridSpec spec{n, n, 1.0};
        auto [g, b] = testutil::random_feasible_fields(n, seed);
        const SourceMask src = SourceMask::point(n, n, 2 + int(seed) % 5, 3);
        auto [t, report] = solve(g, b, src, spec);
        REQUIRE(report.converged);
        const Grid2D<double> dij = testutil::dijkstra_distance(g, b, src, spec);
        for (size_t i = 0; i < t.t.size(); ++i) {
            CHECK(t.t[i] <= dij[i] + 1e-5);
            // graph paths overestimate by at most ~8% plus a boundary term
            CHECK(dij[i] <= 1.10 * t.t[i] + 1.0);
        }
    }
}

TEST_CASE("converged field is a fixed point") {
    const int n = 40;
    const GridSpec spec{n, n, 1.0};
    auto [g, b] = testutil::random_feasible_fields(n, 17);
    const SourceMask src = SourceMask::point(n, n, 20, 20);
    auto [t, report] = solve(g, b, src, spec);
    REQUIRE(report.converged);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            if (src.is_source(r, c)) continue;
            const auto up = node_update(r, c, t.t, g, b, spec.h);
            CHECK(t.t(r, c) - up.t0 <= 1e-6);  // updates only ever lower values
            CHECK(up.t0 <= t.t(r, c) + 1e-12);
        }
}

TEST_CASE("sweep order permutation leaves the fixed point unchanged") {
    const int n = 48;
    const GridSpec spec{n, n, 1.0};
    auto [g, b] = testutil::random_feasible_fields(n, 23);
    const SourceMask src = SourceMask::point(n, n, 10, 31);
    auto [t1, r1] = solve(g, b, src, spec);
    SolveOptions opt;
    opt.sweep_order = {3, 1, 0, 2};
    auto [t2, r2] = solve(g, b, src, spec, opt);
    REQUIRE(r1.converged);
    REQUIRE(r2.converged);
    for (size_t i = 0; i < t1.t.size(); ++i) CHECK(std::abs(t1.t[i] - t2.t[i]) < 1e-5);
}

TEST_CASE("jacobi reaches the same fixed point") {
    const int n = 64;
    const GridSpec spec{n, n, 1.0};
    auto [g, b] = testutil::random_feasible_fields(n, 29, 0.1);
    const SourceMask src = SourceMask::point(n, n, 32, 32);
    auto [ts, rs] = solve(g, b, src, spec);
    // compare fixed points: the Jacobi baseline gets a tighter stop so its
    // remaining geometric tail cannot blur the comparison
    SolveOptions jopt;
    jopt.tol = 1e-8;
    jopt.max_iters = jacobi_iteration_budget(spec);
    auto [tj, rj] = solve_jacobi(g, b, src, spec, jopt);
    REQUIRE(rs.converged);
    REQUIRE(rj.converged);
    for (size_t i = 0; i < ts.t.size(); ++i) CHECK(std::abs(ts.t[i] - tj.t[i]) < 1e-5);
}

TEST_CASE("jacobi iteration count scales with the grid diameter") {
    const int n = 100;
    const GridSpec spec{n, n, 1.0 / n};
    const MetricField g(n, n, 1.0);
    const DriftField b(n, n);
    const SourceMask src = SourceMask::point(n, n, n / 2, n / 2);
    auto [ts, rs] = solve(g, b, src, spec);
    SolveOptions jopt;
    jopt.max_iters = jacobi_iteration_budget(spec);
    auto [tj, rj] = solve_jacobi(g, b, src, spec, jopt);
    REQUIRE(rs.converged);
    REQUIRE(rj.converged);
    CHECK(rj.iterations >= 10 * rs.iterations);
}

TEST_CASE("jacobi converges fast on a trivial grid") {
    const GridSpec spec{3, 3, 1.0};
    const MetricField g(3, 3, 1.0);
    const DriftField b(3, 3);
    const SourceMask src = SourceMask::point(3, 3, 1, 1);
    auto [t, report] = solve_jacobi(g, b, src, spec);
    CHECK(report.converged);
    CHECK(report.iterations <= 3);
}

TEST_CASE("solve report contract") {
    const int n = 64;
    const GridSpec spec{n, n, 1.0};
    const MetricField g(n, n, 1.0);
    const DriftField b(n, n);
    const SourceMask src = SourceMask::point(n, n, 1, 1);

    SUBCASE("converged run ends below tolerance") {
        auto [t, report] = solve(g, b, src, spec);
        REQUIRE(report.converged);
        CHECK(report.max_delta_history.back() < 1e-6);
        CHECK(int(report.max_delta_history.size()) == report.iterations);
    }
    SUBCASE("iteration cap reports non-convergence") {
        SolveOptions opt;
        opt.max_iters = 1;
        auto [t, report] = solve_jacobi(g, b, src, spec, opt);
        CHECK_FALSE(report.converged);
    }
    SUBCASE("dimension mismatch is rejected") {
        const MetricField small(8, 8, 1.0);
        CHECK_THROWS_AS(solve(small, b, src, spec), DimensionMismatch);
    }
    SUBCASE("empty source mask is rejected") {
        const SourceMask none(n, n);
        CHECK_THROWS_AS(solve(g, b, none, spec), Error);
    }
}
