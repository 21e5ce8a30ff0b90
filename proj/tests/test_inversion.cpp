#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "randers/inversion.hpp"
#include "randers/oracle.hpp"

using namespace randers;

namespace {

// two-region isotropic medium used across the recovery tests
MetricField piecewise_metric(int n, double left, double right) {
    MetricField g(n, n, left);
    for (int r = 0; r < n; ++r)
        for (int c = n / 2; c < n; ++c) {
            g.g11(r, c) = right;
            g.g22(r, c) = right;
        }
    return g;
}

}  // namespace

TEST_CASE("generate_observations") {
    const int n = 64;
    const GridSpec spec{n, n, 1.0};
    const MetricField g = piecewise_metric(n, 1.0, 2.0);
    const DriftField b(n, n);
    const std::vector<SourceMask> sources = {SourceMask::point(n, n, n / 2, n / 2)};

    SUBCASE("full density, zero noise reproduces the field") {
        const auto obs = generate_observations(g, b, sources, spec, 1.0, 0.0, 1);
        REQUIRE(obs.size() == 1);
        CHECK(obs[0].observed_count() == n * n - 1);
        auto [t, rep] = solve(g, b, sources[0], spec);
        for (size_t i = 0; i < t.t.size(); ++i)
            if (obs[0].observed[i]) CHECK(obs[0].values[i] == t.t[i]);
    }
    SUBCASE("seven percent of a 64x64 single-source grid is 286 nodes") {
        const auto obs = generate_observations(g, b, sources, spec, 0.07, 0.0, 1);
        CHECK(obs[0].observed_count() == 286);
    }
    SUBCASE("sampling is deterministic in the seed") {
        const auto a = generate_observations(g, b, sources, spec, 0.1, 0.02, 7);
        const auto c = generate_observations(g, b, sources, spec, 0.1, 0.02, 7);
        for (size_t i = 0; i < a[0].observed.size(); ++i) {
            CHECK(a[0].observed[i] == c[0].observed[i]);
            CHECK(a[0].values[i] == c[0].values[i]);
        }
    }
    SUBCASE("noisy values stay nonnegative") {
        const auto obs = generate_observations(g, b, sources, spec, 0.5, 0.2, 11);
        for (size_t i = 0; i < obs[0].values.size(); ++i) CHECK(obs[0].values[i] >= 0.0);
    }
    SUBCASE("invalid density is rejected") {
        CHECK_THROWS_AS(generate_observations(g, b, sources, spec, 0.0, 0.0, 1),
                        InvalidArgument);
    }
}

TEST_CASE("objective_and_grad") {
    const int n = 48;
    const GridSpec spec{n, n, 1.0};
    const MetricField g = piecewise_metric(n, 1.0, 2.0);
    const DriftField b(n, n);
    const std::vector<SourceMask> sources = {SourceMask::point(n, n, n / 2, n / 2)};
    const auto obs = generate_observations(g, b, sources, spec, 1.0, 0.0, 1);
    InverseConfig cfg;

    SUBCASE("zero data loss at the generating parameters") {
        const Objective o = objective_and_grad(g, b, obs, spec, cfg);
        CHECK(o.data_loss == 0.0);
        for (size_t i = 0; i < o.grad.g11.size(); ++i) CHECK(o.grad.g11[i] == 0.0);
    }
    SUBCASE("no regularization means the pure data gradient") {
        const MetricField g0(n, n, 1.0);
        const Objective o = objective_and_grad(g0, b, obs, spec, cfg);
        LossSpec loss{spec, obs};
        const ParamGradients adj = adjoint_gradient(g0, b, loss);
        for (size_t i = 0; i < adj.g11.size(); ++i) {
            CHECK(o.grad.g11[i] == adj.g11[i]);
            CHECK(o.grad.g22[i] == adj.g22[i]);
        }
        CHECK(o.reg_loss == 0.0);
    }
    SUBCASE("two sources add their gradients") {
        const std::vector<SourceMask> two = {SourceMask::point(n, n, 10, 10),
                                             SourceMask::point(n, n, 40, 35)};
        const auto obs2 = generate_observations(g, b, two, spec, 0.3, 0.0, 3);
        const MetricField g0(n, n, 1.0);
        const Objective both = objective_and_grad(g0, b, obs2, spec, cfg);
        const Objective first = objective_and_grad(g0, b, {obs2[0]}, spec, cfg);
        const Objective second = objective_and_grad(g0, b, {obs2[1]}, spec, cfg);
        CHECK(both.loss == doctest::Approx(first.loss + second.loss).epsilon(1e-12));
        for (size_t i = 0; i < both.grad.g11.size(); i += 13)
            CHECK(both.grad.g11[i] ==
                  doctest::Approx(first.grad.g11[i] + second.grad.g11[i]).epsilon(1e-12));
    }
    SUBCASE("regularizer adds its analytic gradient") {
        InverseConfig rcfg = cfg;
        rcfg.lambda_g = 0.01;
        const MetricField g0 = piecewise_metric(n, 1.0, 1.5);
        const Objective with = objective_and_grad(g0, b, obs, spec, rcfg);
        const Objective without = objective_and_grad(g0, b, obs, spec, cfg);
        const TvResult tv = tv_value_grad({g0.g11, g0.g12, g0.g22}, TvVariant::Frobenius);
        CHECK(with.reg_loss == doctest::Approx(0.01 * tv.value).epsilon(1e-12));
        for (size_t i = 0; i < tv.grad[0].size(); i += 11)
            CHECK(with.grad.g11[i] ==
                  doctest::Approx(without.grad.g11[i] + 0.01 * tv.grad[0][i]).epsilon(1e-10));
    }
    SUBCASE("solver failure propagates") {
        InverseConfig bad = cfg;
        bad.solve_max_iters = 1;
        const MetricField g0(n, n, 1.0);
        CHECK_THROWS_AS(objective_and_grad(g0, b, obs, spec, bad), NotConverged);
    }
}

TEST_CASE("optimizer steps") {
    InverseConfig cfg;

    SUBCASE("global norm clipping") {
        Grid2D<double> g(1, 2, 0.0);
        g[0] = 6.0;
        g[1] = 8.0;  // norm 10
        const double pre = clip_global_norm({&g}, 1.0);
        CHECK(pre == doctest::Approx(10.0));
        CHECK(std::hypot(g[0], g[1]) == doctest::Approx(1.0));
        CHECK(g[0] / g[1] == doctest::Approx(6.0 / 8.0));
    }
    SUBCASE("zero gradient leaves parameters alone") {
        Grid2D<double> p(1, 3, 2.5);
        AdamState state;
        adam_step(state, {&p}, {Grid2D<double>(1, 3, 0.0)}, {0.01}, cfg);
        for (size_t i = 0; i < p.size(); ++i) CHECK(p[i] == 2.5);
    }
    SUBCASE("first adam step moves by about the step size") {
        Grid2D<double> p(1, 2, 0.0);
        Grid2D<double> g(1, 2, 0.0);
        g[0] = 10.0;
        g[1] = -10.0;
        AdamState state;
        adam_step(state, {&p}, {g}, {0.01}, cfg);
        CHECK(p[0] == doctest::Approx(-0.01).epsilon(1e-6));
        CHECK(p[1] == doctest::Approx(0.01).epsilon(1e-6));
        CHECK(state.t == 1);
    }
    SUBCASE("gd step is plain descent after clipping") {
        Grid2D<double> p(1, 2, 1.0);
        Grid2D<double> g(1, 2, 0.0);
        g[0] = 0.3;
        g[1] = 0.4;  // norm 0.5, below the clip
        gd_step({&p}, {g}, {0.1}, cfg);
        CHECK(p[0] == doctest::Approx(1.0 - 0.03));
        CHECK(p[1] == doctest::Approx(1.0 - 0.04));
    }
}

TEST_CASE("recover") {
    const int n = 48;
    const GridSpec spec{n, n, 1.0};
    const MetricField gtrue = piecewise_metric(n, 1.0, 2.0);
    const DriftField bzero(n, n);
    const std::vector<SourceMask> sources = {SourceMask::point(n, n, n / 2, n / 2)};

    SUBCASE("ground-truth initialization is a fixed point of the loop") {
        const auto obs = generate_observations(gtrue, bzero, sources, spec, 1.0, 0.0, 1);
        InverseConfig cfg;
        cfg.iters = 5;
        cfg.lambda_g = 0.0;
        TruthFields truth;
        truth.metric = gtrue;
        const RecoveryResult res = recover(obs, spec, cfg, gtrue, {}, &truth);
        CHECK(res.final_error <= 1e-6);
        for (double l : res.loss_history) CHECK(l == 0.0);
    }

    SUBCASE("isotropic recovery improves and histories line up") {
        const auto obs = generate_observations(gtrue, bzero, sources, spec, 1.0, 0.0, 1);
        InverseConfig cfg;
        cfg.iters = 120;
        cfg.lambda_g = 1e-3;
        TruthFields truth;
        truth.metric = gtrue;
        const RecoveryResult res = recover(obs, spec, cfg, {}, {}, &truth);
        REQUIRE(int(res.loss_history.size()) == cfg.iters);
        REQUIRE(int(res.error_history.size()) == cfg.iters);
        CHECK(res.final_error < 0.5 * res.error_history.front());
        // net loss decrease over any 20-iteration window
        for (size_t i = 0; i + 20 < res.loss_history.size(); ++i)
            CHECK(res.loss_history[i + 20] <= res.loss_history[i] * 1.001 + 1e-12);
    }

    SUBCASE("drift-only recovery moves toward a constant drift") {
        const DriftField btrue(n, n, 0.15, 0.08);
        const auto obs = generate_observations(MetricField(n, n, 1.0), btrue, sources, spec, 1.0,
                                               0.0, 2);
        InverseConfig cfg;
        cfg.param = Parameterization::DriftOnly;
        cfg.iters = 300;
        cfg.lambda_b = 0.1;  // the drift circle per node is only pinned through smoothing
        TruthFields truth;
        truth.drift = btrue;
        const RecoveryResult res = recover(obs, spec, cfg, MetricField(n, n, 1.0), {}, &truth);
        CHECK(res.final_error < 0.05);
    }

    SUBCASE("iterates stay feasible") {
        const DriftField btrue(n, n, 0.15, 0.08);
        const auto obs =
            generate_observations(gtrue, btrue, sources, spec, 0.5, 0.05, 3);
        InverseConfig cfg;
        cfg.param = Parameterization::Joint;
        cfg.iters = 40;
        const RecoveryResult res = recover(obs, spec, cfg);
        const ProjectionConfig& pc = cfg.projection;
        for (int i = 0; i < spec.count(); ++i) {
            double hi, lo;
            sym2_eigenvalues(
                {res.metric.g11[i], res.metric.g12[i], res.metric.g22[i]}, hi, lo);
            CHECK(lo >= pc.eps_min - 1e-9);
            CHECK(hi <= pc.lambda_max + 1e-9);
            CHECK(drift_norm_sq(res.drift.b1[i], res.drift.b2[i], res.metric.g11[i],
                                res.metric.g12[i], res.metric.g22[i]) <=
                  pc.tau * pc.tau + 1e-9);
        }
    }

    SUBCASE("diverging loss is detected") {
        const auto obs = generate_observations(gtrue, bzero, sources, spec, 1.0, 0.0, 1);
        InverseConfig cfg;
        cfg.optimizer = OptimizerKind::Gd;
        cfg.step_g = 1e5;
        cfg.grad_clip_norm = 1e9;
        cfg.iters = 50;
        MetricField near = gtrue;
        near.g11(2, 2) += 1e-3;
        near.g22(2, 2) += 1e-3;
        CHECK_THROWS_AS(recover(obs, spec, cfg, near, {}, nullptr), DivergedLoss);
    }

    SUBCASE("config validation") {
        InverseConfig cfg;
        cfg.iters = 0;
        const auto obs = generate_observations(gtrue, bzero, sources, spec, 0.1, 0.0, 1);
        CHECK_THROWS_AS(recover(obs, spec, cfg), InvalidArgument);
    }
}

TEST_CASE("plain gradient descent trails adam by a wide margin") {
    const int n = 48;
    const GridSpec spec{n, n, 1.0 / n};
    const MetricField gtrue = piecewise_metric(n, 1.0, 2.0);
    const std::vector<SourceMask> sources = {SourceMask::point(n, n, n / 2, n / 2)};
    const auto obs = generate_observations(gtrue, DriftField(n, n), sources, spec, 1.0, 0.0, 1);
    TruthFields truth;
    truth.metric = gtrue;

    InverseConfig cfg;
    cfg.iters = 150;
    cfg.lambda_g = 1e-3;
    const RecoveryResult adam = recover(obs, spec, cfg, {}, {}, &truth);
    cfg.optimizer = OptimizerKind::Gd;
    const RecoveryResult gd = recover(obs, spec, cfg, {}, {}, &truth);
    CHECK(gd.final_error >= 3.0 * adam.final_error);
}

TEST_CASE("multi_source_recover smoke run") {
    InverseConfig cfg;
    cfg.iters = 25;
    cfg.lambda_g = 1e-3;
    const auto rows = multi_source_recover({1, 2}, 0.07, cfg, 48, 5);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].k == 1);
    CHECK(rows[1].k == 2);
    CHECK(rows[1].total_observations > rows[0].total_observations);
    for (const auto& row : rows) {
        CHECK(row.error > 0.0);
        CHECK(row.error < 1.0);
    }
}
