// rfeik: command-line front end for the Randers eikonal solver, its adjoint
// gradients, and the inversion driver. Exit codes: 0 success, 2 usage or I/O
// problems, 3 numerical failures.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "randers/field_io.hpp"
#include "randers/inversion.hpp"
#include "randers/oracle.hpp"

using namespace randers;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

Sym2 rotated(double lam1, double lam2, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {lam1 * c * c + lam2 * s * s, (lam1 - lam2) * c * s, lam1 * s * s + lam2 * c * c};
}

// observation bundle: 4-channel field file (source mask, observed mask,
// observed times, reserved)
ObservationSet read_bundle(const std::string& path) {
    FieldData d = read_field(path);
    if (d.channel_count() != 4)
        throw DimensionMismatch("observation bundle needs 4 channels: " + path);
    ObservationSet obs;
    const int rows = d.rows(), cols = d.cols();
    obs.sources = SourceMask(rows, cols);
    obs.observed = Grid2D<uint8_t>(rows, cols, 0);
    for (size_t i = 0; i < obs.observed.size(); ++i) {
        obs.sources.mask[i] = d.channels[0][i] != 0.0 ? 1 : 0;
        obs.observed[i] = d.channels[1][i] != 0.0 ? 1 : 0;
    }
    obs.values = std::move(d.channels[2]);
    return obs;
}

struct SolveArgs {
    std::string metric, drift, sources, out;
    double h = 1.0;
    double tol = 1e-6;
    int max_iters = 50;
    std::string solver = "sweep";
    bool max_iters_set = false;
};

int cmd_solve(const SolveArgs& a) {
    const MetricField g = read_metric(a.metric);
    const DriftField b = read_drift(a.drift);
    const SourceMask src = read_mask(a.sources);
    if (!b.b1.same_shape(g.rows(), g.cols()) || !src.mask.same_shape(g.rows(), g.cols())) {
        std::fprintf(stderr, "dimension mismatch\n");
        return kExitUsage;
    }
    const GridSpec spec{g.rows(), g.cols(), a.h};
    SolveOptions opt;
    opt.tol = a.tol;
    opt.max_iters = a.max_iters;
    if (a.solver == "jacobi" && !a.max_iters_set) opt.max_iters = jacobi_iteration_budget(spec);

    auto [t, report] =
        a.solver == "jacobi" ? solve_jacobi(g, b, src, spec, opt) : solve(g, b, src, spec, opt);
    write_arrival(a.out, t);
    std::printf("iters=%d max_delta=%s\n", report.iterations,
                fmt(report.max_delta_history.back()).c_str());
    return report.converged ? kExitOk : kExitNumerical;
}

struct GradcheckArgs {
    std::string config = "iso";
    int points = 20;
    double eps = 1e-5;
    uint64_t seed = 42;
};

int cmd_gradcheck(const GradcheckArgs& a) {
    const int n = 64;
    const GridSpec spec{n, n, 1.0 / n};
    MetricField g(n, n, 1.0);
    DriftField b(n, n);
    std::vector<Channel> channels;
    if (a.config == "iso") {
        channels = {Channel::G11, Channel::G12, Channel::G22, Channel::B1, Channel::B2};
    } else if (a.config == "aniso") {
        g = MetricField::constant(n, n, rotated(2.0, 0.5, std::numbers::pi / 6.0));
        channels = {Channel::G11, Channel::G12, Channel::G22};
    } else if (a.config == "drift") {
        b = DriftField(n, n, 0.15, 0.08);
        channels = {Channel::B1, Channel::B2};
    } else {
        std::fprintf(stderr, "unknown gradcheck case: %s\n", a.config.c_str());
        return kExitUsage;
    }

    ObservationSet obs;
    obs.sources = SourceMask::point(n, n, n / 2, n / 2);
    obs.observed = Grid2D<uint8_t>(n, n, 0);
    obs.values = Grid2D<double>(n, n, 0.0);
    std::mt19937_64 rng(a.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < spec.count(); ++i)
        if (!obs.sources.mask[i] && uni(rng) < 0.3) obs.observed[i] = 1;
    const LossSpec loss{spec, {obs}};

    const GradCheckResult res = gradient_check(g, b, loss, channels, a.points, a.eps, a.seed);
    const double threshold = 1e-5;
    bool all_pass = int(res.points.size()) >= a.points;
    for (size_t i = 0; i < res.points.size(); ++i) {
        const bool ok = res.points[i].rel_error < threshold;
        all_pass = all_pass && ok;
        std::printf("point=%zu node=%d rel_error=%s status=%s\n", i, res.points[i].node,
                    fmt(res.points[i].rel_error).c_str(), ok ? "PASS" : "FAIL");
    }
    std::printf("points=%zu max_rel_error=%s result=%s\n", res.points.size(),
                fmt(res.max_rel_error).c_str(), all_pass ? "PASS" : "FAIL");
    return all_pass ? kExitOk : kExitNumerical;
}

struct InvertArgs {
    std::vector<std::string> obs;
    std::string init_metric, init_drift, truth, out_prefix;
    std::string param = "iso";
    std::string optimizer = "adam";
    double lambda_g = 1e-3;
    double lambda_b = 1e-3;
    int iters = 300;
    double h = 1.0;
    uint64_t seed = 42;
};

int cmd_invert(const InvertArgs& a) {
    std::vector<ObservationSet> obs;
    for (const auto& path : a.obs) obs.push_back(read_bundle(path));
    const int rows = obs[0].observed.rows(), cols = obs[0].observed.cols();
    const GridSpec spec{rows, cols, a.h};

    InverseConfig cfg;
    cfg.iters = a.iters;
    cfg.lambda_g = a.lambda_g;
    cfg.lambda_b = a.lambda_b;
    cfg.seed = a.seed;
    cfg.optimizer = a.optimizer == "gd" ? OptimizerKind::Gd : OptimizerKind::Adam;
    if (a.param == "iso")
        cfg.param = Parameterization::Isotropic;
    else if (a.param == "diag")
        cfg.param = Parameterization::Diagonal;
    else if (a.param == "full")
        cfg.param = Parameterization::Full;
    else if (a.param == "drift")
        cfg.param = Parameterization::DriftOnly;
    else if (a.param == "joint")
        cfg.param = Parameterization::Joint;
    else {
        std::fprintf(stderr, "unknown parameterization: %s\n", a.param.c_str());
        return kExitUsage;
    }

    std::optional<MetricField> init_g;
    std::optional<DriftField> init_b;
    if (!a.init_metric.empty()) init_g = read_metric(a.init_metric);
    if (!a.init_drift.empty()) init_b = read_drift(a.init_drift);

    TruthFields truth;
    const bool has_truth = !a.truth.empty();
    if (has_truth) {
        FieldData d = read_field(a.truth);
        if (d.channel_count() == 1) {
            MetricField gm(d.rows(), d.cols());
            gm.g11 = d.channels[0];
            gm.g22 = std::move(d.channels[0]);
            truth.metric = std::move(gm);
        } else if (d.channel_count() == 2) {
            DriftField bd;
            bd.b1 = std::move(d.channels[0]);
            bd.b2 = std::move(d.channels[1]);
            truth.drift = std::move(bd);
        } else if (d.channel_count() == 3) {
            MetricField gm;
            gm.g11 = std::move(d.channels[0]);
            gm.g12 = std::move(d.channels[1]);
            gm.g22 = std::move(d.channels[2]);
            truth.metric = std::move(gm);
        } else if (d.channel_count() == 5) {
            MetricField gm;
            gm.g11 = std::move(d.channels[0]);
            gm.g12 = std::move(d.channels[1]);
            gm.g22 = std::move(d.channels[2]);
            truth.metric = std::move(gm);
            DriftField bd;
            bd.b1 = std::move(d.channels[3]);
            bd.b2 = std::move(d.channels[4]);
            truth.drift = std::move(bd);
        } else {
            std::fprintf(stderr, "truth file needs 1, 2, 3 or 5 channels\n");
            return kExitUsage;
        }
    }

    const RecoveryResult res =
        recover(obs, spec, cfg, init_g, init_b, has_truth ? &truth : nullptr);

    if (cfg.param != Parameterization::DriftOnly)
        write_metric(a.out_prefix + "_metric.rfk", res.metric);
    if (cfg.param == Parameterization::DriftOnly || cfg.param == Parameterization::Joint)
        write_drift(a.out_prefix + "_drift.rfk", res.drift);

    Grid2D<double> history(res.iterations, 3, 0.0);
    for (int i = 0; i < res.iterations; ++i) {
        history(i, 0) = i;
        history(i, 1) = res.loss_history[i];
        history(i, 2) = has_truth ? res.error_history[i] : -1.0;
    }
    export_csv(history, a.out_prefix + "_history.csv");

    std::printf("loss=%s\n", fmt(res.loss_history.back()).c_str());
    if (has_truth) std::printf("rel_error=%s\n", fmt(res.final_error).c_str());
    return kExitOk;
}

struct ConvergenceArgs {
    std::vector<int> sizes = {25, 50, 100, 200, 400};
    std::string config = "iso";
    std::string out;
};

int cmd_convergence(const ConvergenceArgs& a) {
    StudyCase sc;
    if (a.config == "iso")
        sc = StudyCase::Isotropic;
    else if (a.config == "aniso")
        sc = StudyCase::Anisotropic;
    else if (a.config == "rotated")
        sc = StudyCase::Rotated;
    else if (a.config == "combined")
        sc = StudyCase::Combined;
    else {
        std::fprintf(stderr, "unknown convergence case: %s\n", a.config.c_str());
        return kExitUsage;
    }
    if (a.sizes.size() < 2) {
        std::fprintf(stderr, "need at least two sizes for a rate fit\n");
        return kExitUsage;
    }
    const StudyReport rep = convergence_study(a.sizes, sc);
    Grid2D<double> table(static_cast<int>(rep.rows.size()), 6, 0.0);
    for (size_t i = 0; i < rep.rows.size(); ++i) {
        const StudyRow& r = rep.rows[i];
        const int row = static_cast<int>(i);
        table(row, 0) = r.h;
        table(row, 1) = r.l2;
        table(row, 2) = r.linf;
        table(row, 3) = r.rel_l2;
        table(row, 4) = r.iterations;
        table(row, 5) = rep.alpha;
    }
    export_csv(table, a.out);
    std::printf("alpha=%s rows=%zu\n", fmt(rep.alpha).c_str(), rep.rows.size());
    return kExitOk;
}

struct ScenarioArgs {
    std::string kind;
    int size = 100;
    uint64_t seed = 42;
    std::string out_prefix;
    double alpha = 1.0;
    double b1 = 0.3, b2 = 0.0;
    double density = 0.0878;
};

int cmd_scenario(const ScenarioArgs& a) {
    ScenarioParams p;
    p.size = a.size;
    p.alpha = a.alpha;
    p.b = {a.b1, a.b2};
    p.density = a.density;
    const Scenario s = scenario(parse_scenario_kind(a.kind), p, a.seed);
    write_metric(a.out_prefix + "_metric.rfk", s.metric);
    write_drift(a.out_prefix + "_drift.rfk", s.drift);
    write_mask(a.out_prefix + "_sources.rfk", s.sources);
    if (s.has_report) export_csv(s.report, a.out_prefix + "_report.csv");
    std::printf("size=%d report=%d\n", a.size, s.has_report ? 1 : 0);
    return kExitOk;
}

struct BenchArgs {
    std::vector<int> sizes = {50, 100, 200, 400};
    std::string solver = "sweep";
    int repeat = 3;
    std::string out;
};

int cmd_bench(const BenchArgs& a) {
    if (a.repeat < 1) {
        std::fprintf(stderr, "repeat must be positive\n");
        return kExitUsage;
    }
    Grid2D<double> table(static_cast<int>(a.sizes.size()), 3, 0.0);
    for (size_t i = 0; i < a.sizes.size(); ++i) {
        const int n = a.sizes[i];
        const GridSpec spec{n, n, 1.0 / n};
        const MetricField g(n, n, 1.0);
        const DriftField b(n, n);
        const SourceMask src = SourceMask::point(n, n, n / 2, n / 2);
        SolveOptions opt;
        if (a.solver == "jacobi") opt.max_iters = jacobi_iteration_budget(spec);

        std::vector<double> times;
        int iterations = 0;
        for (int rep = 0; rep < a.repeat; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            auto [t, report] = a.solver == "jacobi" ? solve_jacobi(g, b, src, spec, opt)
                                                    : solve(g, b, src, spec, opt);
            times.push_back(
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count());
            iterations = report.iterations;
        }
        std::sort(times.begin(), times.end());
        const int row = static_cast<int>(i);
        table(row, 0) = n;
        table(row, 1) = iterations;
        table(row, 2) = times[times.size() / 2];
        std::printf("size=%d iters=%d median_ms=%s\n", n, iterations,
                    fmt(times[times.size() / 2]).c_str());
    }
    export_csv(table, a.out);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randers eikonal solver and inversion toolkit"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print help");  // keep --h free for grid spacing

    SolveArgs sa;
    auto* solve_cmd = app.add_subcommand("solve", "forward arrival-time solve");
    solve_cmd->set_help_flag("--help");
    solve_cmd->add_option("--metric", sa.metric, "metric field file")->required();
    solve_cmd->add_option("--drift", sa.drift, "drift field file")->required();
    solve_cmd->add_option("--sources", sa.sources, "source mask file")->required();
    solve_cmd->add_option("--h", sa.h, "grid spacing");
    solve_cmd->add_option("--out", sa.out, "output arrival file")->required();
    solve_cmd->add_option("--tol", sa.tol, "convergence tolerance");
    auto* mi = solve_cmd->add_option("--max-iters", sa.max_iters, "iteration cap");
    solve_cmd->add_option("--solver", sa.solver, "sweep|jacobi")
        ->check(CLI::IsMember({"sweep", "jacobi"}));

    GradcheckArgs ga;
    auto* grad_cmd = app.add_subcommand("gradcheck", "adjoint vs finite differences");
    grad_cmd->add_option("--case", ga.config, "iso|aniso|drift");
    grad_cmd->add_option("--points", ga.points, "stable points to test")
        ->check(CLI::PositiveNumber);
    grad_cmd->add_option("--eps", ga.eps, "finite-difference step");
    grad_cmd->add_option("--seed", ga.seed, "rng seed");

    InvertArgs ia;
    auto* inv_cmd = app.add_subcommand("invert", "recover fields from observations");
    inv_cmd->set_help_flag("--help");
    inv_cmd->add_option("--obs", ia.obs, "observation bundle files")->required()->expected(-1);
    inv_cmd->add_option("--init", ia.init_metric, "initial metric field file");
    inv_cmd->add_option("--init-drift", ia.init_drift, "initial drift field file");
    inv_cmd->add_option("--truth", ia.truth, "ground-truth field file for error reporting");
    inv_cmd->add_option("--param", ia.param, "iso|diag|full|drift|joint");
    inv_cmd->add_option("--optimizer", ia.optimizer, "adam|gd")
        ->check(CLI::IsMember({"adam", "gd"}));
    inv_cmd->add_option("--lambda-g", ia.lambda_g, "metric TV weight");
    inv_cmd->add_option("--lambda-b", ia.lambda_b, "drift TV weight");
    inv_cmd->add_option("--iters", ia.iters, "iterations")->check(CLI::PositiveNumber);
    inv_cmd->add_option("--h", ia.h, "grid spacing");
    inv_cmd->add_option("--seed", ia.seed, "rng seed");
    inv_cmd->add_option("--out-prefix", ia.out_prefix, "output prefix")->required();

    ConvergenceArgs ca;
    auto* conv_cmd = app.add_subcommand("convergence", "grid refinement study");
    conv_cmd->add_option("--sizes", ca.sizes, "grid sizes")->delimiter(',');
    conv_cmd->add_option("--case", ca.config, "iso|aniso|rotated|combined");
    conv_cmd->add_option("--out", ca.out, "output csv")->required();

    ScenarioArgs sca;
    auto* scen_cmd = app.add_subcommand("scenario", "synthetic scenario generator");
    scen_cmd->add_option("--kind", sca.kind, "scenario kind")->required();
    scen_cmd->add_option("--size", sca.size, "grid size");
    scen_cmd->add_option("--seed", sca.seed, "rng seed");
    scen_cmd->add_option("--alpha", sca.alpha, "terrain slope sensitivity");
    scen_cmd->add_option("--b1", sca.b1, "drift x component");
    scen_cmd->add_option("--b2", sca.b2, "drift y component");
    scen_cmd->add_option("--density", sca.density, "observation density");
    scen_cmd->add_option("--out-prefix", sca.out_prefix, "output prefix")->required();

    BenchArgs ba;
    auto* bench_cmd = app.add_subcommand("bench", "solver timing");
    bench_cmd->add_option("--sizes", ba.sizes, "grid sizes")->delimiter(',');
    bench_cmd->add_option("--solver", ba.solver, "sweep|jacobi")
        ->check(CLI::IsMember({"sweep", "jacobi"}));
    bench_cmd->add_option("--repeat", ba.repeat, "repetitions per size");
    bench_cmd->add_option("--out", ba.out, "output csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*solve_cmd) {
            sa.max_iters_set = mi->count() > 0;
            return cmd_solve(sa);
        }
        if (*grad_cmd) return cmd_gradcheck(ga);
        if (*inv_cmd) return cmd_invert(ia);
        if (*conv_cmd) return cmd_convergence(ca);
        if (*scen_cmd) return cmd_scenario(sca);
        if (*bench_cmd) return cmd_bench(ba);
    } catch (const NotConverged& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitNumerical;
    } catch (const DivergedLoss& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitNumerical;
    } catch (const DimensionMismatch&) {
        std::fprintf(stderr, "dimension mismatch\n");
        return kExitUsage;
    } catch (const Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
