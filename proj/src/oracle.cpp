#include "randers/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "randers/feasibility.hpp"

namespace randers {

namespace {

constexpr int kSourceExclusionRadius = 2;

Grid2D<uint8_t> source_exclusion(const SourceMask& src, int radius) {
    const int rows = src.mask.rows(), cols = src.mask.cols();
    Grid2D<uint8_t> near(rows, cols, 0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (!src.is_source(r, c)) continue;
            for (int dr = -radius; dr <= radius; ++dr)
                for (int dc = -radius; dc <= radius; ++dc) {
                    const int nr = r + dr, nc = c + dc;
                    if (near.in_bounds(nr, nc)) near(nr, nc) = 1;
                }
        }
    return near;
}

struct ErrorStats {
    double l2 = 0.0, linf = 0.0, rel_l2 = 0.0;
};

ErrorStats field_error(const Grid2D<double>& value, const Grid2D<double>& ref,
                       const Grid2D<uint8_t>& excluded) {
    ErrorStats st;
    double sq = 0.0, ref_sq = 0.0;
    long n = 0;
    for (size_t i = 0; i < value.size(); ++i) {
        if (excluded[i] || !is_reached(value[i]) || !is_reached(ref[i])) continue;
        const double e = value[i] - ref[i];
        sq += e * e;
        ref_sq += ref[i] * ref[i];
        st.linf = std::max(st.linf, std::abs(e));
        ++n;
    }
    if (n > 0) st.l2 = std::sqrt(sq / static_cast<double>(n));
    if (ref_sq > 0.0) st.rel_l2 = std::sqrt(sq / ref_sq);
    return st;
}

double bilinear(const Grid2D<double>& f, double row, double col) {
    const int r0 = std::clamp(static_cast<int>(std::floor(row)), 0, f.rows() - 2);
    const int c0 = std::clamp(static_cast<int>(std::floor(col)), 0, f.cols() - 2);
    const double fr = std::clamp(row - r0, 0.0, 1.0);
    const double fc = std::clamp(col - c0, 0.0, 1.0);
    return (1 - fr) * ((1 - fc) * f(r0, c0) + fc * f(r0, c0 + 1)) +
           fr * ((1 - fc) * f(r0 + 1, c0) + fc * f(r0 + 1, c0 + 1));
}

Sym2 rotated_metric(double lam1, double lam2, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {lam1 * c * c + lam2 * s * s, (lam1 - lam2) * c * s, lam1 * s * s + lam2 * c * c};
}

struct CaseSetup {
    Sym2 g = Sym2::identity();
    Vec2 b{0.0, 0.0};
};

CaseSetup study_setup(StudyCase sc) {
    switch (sc) {
        case StudyCase::Isotropic:
            return {};
        case StudyCase::Anisotropic:
            return {{4.0, 0.0, 0.25}, {0.0, 0.0}};
        case StudyCase::Rotated:
            return {rotated_metric(4.0, 0.25, std::numbers::pi / 4.0), {0.0, 0.0}};
        case StudyCase::Combined:
            return {rotated_metric(2.0, 0.5, std::numbers::pi / 6.0), {0.2, 0.1}};
    }
    return {};
}

}  // namespace

ArrivalField analytic_distance(const GridSpec& spec,
                               const std::vector<std::pair<int, int>>& source_nodes,
                               const Sym2& g, const Vec2& b) {
    if (source_nodes.empty()) throw InvalidArgument("analytic_distance: no sources");
    if (!(g.a11 > 0.0) || !(g.det() > 0.0))
        throw InvalidArgument("analytic_distance: metric must be SPD");
    if (drift_norm_sq(b.x, b.y, g.a11, g.a12, g.a22) >= 1.0)
        throw InfeasibleDrift("analytic_distance: ||b||_{G^-1} must be < 1");

    ArrivalField out(spec.rows, spec.cols);
    for (int r = 0; r < spec.rows; ++r)
        for (int c = 0; c < spec.cols; ++c) {
            double best = kUnreached;
            for (const auto& [sr, sc] : source_nodes) {
                const Vec2 d{(c - sc) * spec.h, (r - sr) * spec.h};
                best = std::min(best, std::sqrt(g.quad(d)) - b.dot(d));
            }
            out.t(r, c) = best;
        }
    return out;
}

StudyReport convergence_study(const std::vector<int>& sizes, StudyCase study_case) {
    if (sizes.empty()) throw InvalidArgument("convergence_study: no sizes");
    const CaseSetup setup = study_setup(study_case);
    StudyReport report;
    report.alpha = std::nan("");

    if (study_case == StudyCase::Combined) {
        // No closed form: compare the coarsest against the finest grid at
        // coincident physical points (bilinear sampling of the fine field).
        if (sizes.size() < 2)
            throw InvalidArgument("convergence_study: combined case needs two sizes");
        const int nc = sizes.front(), nf = sizes.back();
        const GridSpec coarse{nc, nc, 1.0 / nc};
        const GridSpec fine{nf, nf, 1.0 / nf};
        const auto run = [&](const GridSpec& spec) {
            const MetricField g = MetricField::constant(spec.rows, spec.cols, setup.g);
            const DriftField b(spec.rows, spec.cols, setup.b.x, setup.b.y);
            const SourceMask src =
                SourceMask::point(spec.rows, spec.cols, spec.rows / 10, spec.cols / 10);
            return solve(g, b, src, spec);
        };
        const auto t0 = std::chrono::steady_clock::now();
        auto [tc, rc] = run(coarse);
        auto [tf, rf] = run(fine);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        Grid2D<double> sampled(nc, nc, 0.0);
        for (int r = 0; r < nc; ++r)
            for (int c = 0; c < nc; ++c) {
                const Vec2 p = coarse.position(r, c);
                sampled(r, c) = bilinear(tf.t, p.y / fine.h, p.x / fine.h);
            }
        const auto excl = source_exclusion(
            SourceMask::point(nc, nc, nc / 10, nc / 10), kSourceExclusionRadius);
        const ErrorStats st = field_error(tc.t, sampled, excl);
        report.rows.push_back({nc, coarse.h, st.l2, st.linf, st.rel_l2, rc.iterations, secs});
        return report;
    }

    for (int n : sizes) {
        const GridSpec spec{n, n, 1.0 / n};
        const MetricField g = MetricField::constant(n, n, setup.g);
        const DriftField b(n, n, setup.b.x, setup.b.y);
        const int sr = n / 10, sc = n / 10;
        const SourceMask src = SourceMask::point(n, n, sr, sc);

        const auto t0 = std::chrono::steady_clock::now();
        auto [t, rep] = solve(g, b, src, spec);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const ArrivalField ref = analytic_distance(spec, {{sr, sc}}, setup.g, setup.b);
        const auto excl = source_exclusion(src, kSourceExclusionRadius);
        const ErrorStats st = field_error(t.t, ref.t, excl);
        report.rows.push_back({n, spec.h, st.l2, st.linf, st.rel_l2, rep.iterations, secs});
    }

    if (report.rows.size() >= 3) {
        // least-squares slope of log(l2) against log(h)
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const int m = static_cast<int>(report.rows.size());
        for (const auto& row : report.rows) {
            const double x = std::log(row.h), y = std::log(row.l2);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        report.alpha = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    return report;
}

ResidualReport eikonal_residual(const ArrivalField& t, const MetricField& g, const DriftField& b,
                                const SourceMask& src, const GridSpec& spec) {
    ResidualReport out;
    out.residual = Grid2D<double>(spec.rows, spec.cols, 0.0);
    out.valid = Grid2D<uint8_t>(spec.rows, spec.cols, 0);
    const auto excl = source_exclusion(src, kSourceExclusionRadius);

    double sum = 0.0;
    for (int r = 1; r < spec.rows - 1; ++r)
        for (int c = 1; c < spec.cols - 1; ++c) {
            if (excl(r, c) || !is_reached(t.t(r, c))) continue;
            if (!is_reached(t.t(r, c - 1)) || !is_reached(t.t(r, c + 1)) ||
                !is_reached(t.t(r - 1, c)) || !is_reached(t.t(r + 1, c)))
                continue;
            const Vec2 grad{(t.t(r, c + 1) - t.t(r, c - 1)) / (2.0 * spec.h),
                            (t.t(r + 1, c) - t.t(r - 1, c)) / (2.0 * spec.h)};
            const Vec2 q = grad + b.at(r, c);
            const Sym2 ginv = g.at(r, c).inverse();
            const double res = std::abs(std::sqrt(ginv.quad(q)) - 1.0);
            out.residual(r, c) = res;
            out.valid(r, c) = 1;
            out.max = std::max(out.max, res);
            sum += res;
            ++out.count;
        }
    if (out.count > 0) out.mean = sum / out.count;
    return out;
}

double loss_value(const MetricField& g, const DriftField& b, const LossSpec& loss) {
    SolveOptions opt;
    opt.tol = loss.tol;
    opt.max_iters = loss.max_iters;
    double total = 0.0;
    for (const ObservationSet& o : loss.obs) {
        auto [t, rep] = solve(g, b, o.sources, loss.spec, opt);
        if (!rep.converged) throw NotConverged("loss_value: forward solve did not converge");
        total += loss_grad_mse(t, o).loss;
    }
    return total;
}

ParamGradients adjoint_gradient(const MetricField& g, const DriftField& b, const LossSpec& loss) {
    SolveOptions opt;
    opt.tol = loss.tol;
    opt.max_iters = loss.max_iters;
    ParamGradients acc(loss.spec.rows, loss.spec.cols);
    for (const ObservationSet& o : loss.obs) {
        auto [t, rep] = solve(g, b, o.sources, loss.spec, opt);
        if (!rep.converged) throw NotConverged("adjoint_gradient: forward solve did not converge");
        const LossGrad lg = loss_grad_mse(t, o);
        const StencilRecordSet records = identify_stencils(t, g, b, o.sources, loss.spec, loss.tol);
        const AdjointField adj = solve_adjoint(records, t, lg.grad);
        const ParamGradients pg = param_gradients(records, adj);
        for (size_t i = 0; i < acc.g11.size(); ++i) {
            acc.g11[i] += pg.g11[i];
            acc.g12[i] += pg.g12[i];
            acc.g22[i] += pg.g22[i];
            acc.b1[i] += pg.b1[i];
            acc.b2[i] += pg.b2[i];
        }
    }
    return acc;
}

namespace {

void nudge(MetricField& g, DriftField& b, Channel ch, int node, double delta) {
    switch (ch) {
        case Channel::G11: g.g11[node] += delta; break;
        case Channel::G12: g.g12[node] += delta; break;
        case Channel::G22: g.g22[node] += delta; break;
        case Channel::B1: b.b1[node] += delta; break;
        case Channel::B2: b.b2[node] += delta; break;
    }
}

double channel_value(const ParamGradients& pg, Channel ch, int node) {
    switch (ch) {
        case Channel::G11: return pg.g11[node];
        case Channel::G12: return pg.g12[node];
        case Channel::G22: return pg.g22[node];
        case Channel::B1: return pg.b1[node];
        case Channel::B2: return pg.b2[node];
    }
    return 0.0;
}

bool records_equal(const StencilRecordSet& a, const StencilRecordSet& b) {
    if (a.records.size() != b.records.size()) return false;
    for (size_t i = 0; i < a.records.size(); ++i) {
        const StencilRecord &ra = a.records[i], &rb = b.records[i];
        if (ra.node != rb.node || ra.type != rb.type || ra.stencil != rb.stencil ||
            ra.donor[0] != rb.donor[0] || ra.donor[1] != rb.donor[1])
            return false;
    }
    return true;
}

std::vector<StencilRecordSet> identify_all(const MetricField& g, const DriftField& b,
                                           const LossSpec& loss) {
    SolveOptions opt;
    opt.tol = loss.tol;
    opt.max_iters = loss.max_iters;
    std::vector<StencilRecordSet> out;
    for (const ObservationSet& o : loss.obs) {
        auto [t, rep] = solve(g, b, o.sources, loss.spec, opt);
        if (!rep.converged) throw NotConverged("stencil identification: solve did not converge");
        out.push_back(identify_stencils(t, g, b, o.sources, loss.spec, loss.tol));
    }
    return out;
}

}  // namespace

double fd_gradient(const MetricField& g, const DriftField& b, Channel channel, int node,
                   double eps, const LossSpec& loss) {
    if (!(eps > 0.0)) throw InvalidArgument("fd_gradient: eps must be positive");
    MetricField gp = g, gm = g;
    DriftField bp = b, bm = b;
    nudge(gp, bp, channel, node, eps);
    nudge(gm, bm, channel, node, -eps);
    return (loss_value(gp, bp, loss) - loss_value(gm, bm, loss)) / (2.0 * eps);
}

bool stencil_stable(const MetricField& g, const DriftField& b, Channel channel, int node,
                    double eps, const LossSpec& loss) {
    MetricField gp = g, gm = g;
    DriftField bp = b, bm = b;
    nudge(gp, bp, channel, node, eps);
    nudge(gm, bm, channel, node, -eps);
    const auto plus = identify_all(gp, bp, loss);
    const auto minus = identify_all(gm, bm, loss);
    for (size_t s = 0; s < plus.size(); ++s)
        if (!records_equal(plus[s], minus[s])) return false;
    return true;
}

GradCheckResult gradient_check(const MetricField& g, const DriftField& b, const LossSpec& loss,
                               const std::vector<Channel>& channels, int n_points, double eps,
                               uint64_t seed) {
    if (n_points < 1) throw InvalidArgument("gradient_check: n_points must be >= 1");
    if (channels.empty()) throw InvalidArgument("gradient_check: no channels");
    const GridSpec& spec = loss.spec;
    const ParamGradients adj = adjoint_gradient(g, b, loss);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick_r(2, spec.rows - 3);
    std::uniform_int_distribution<int> pick_c(2, spec.cols - 3);
    std::uniform_int_distribution<size_t> pick_ch(0, channels.size() - 1);

    GradCheckResult out;
    const int max_attempts = 40 * n_points;
    for (int attempt = 0; attempt < max_attempts &&
                          static_cast<int>(out.points.size()) < n_points;
         ++attempt) {
        const int r = pick_r(rng), c = pick_c(rng);
        const Channel ch = channels[pick_ch(rng)];
        const int node = r * spec.cols + c;
        bool is_src = false;
        for (const auto& o : loss.obs) is_src = is_src || o.sources.mask[node];
        if (is_src) continue;

        if (!stencil_stable(g, b, ch, node, eps, loss)) {
            ++out.skipped_unstable;
            continue;
        }
        const double fd = fd_gradient(g, b, ch, node, eps, loss);
        const double an = channel_value(adj, ch, node);
        const double denom = std::max(std::abs(fd), std::abs(an));
        if (denom < 1e-12) {
            ++out.skipped_zero;
            continue;
        }
        const double rel = std::abs(fd - an) / denom;
        out.points.push_back({node, ch, fd, an, rel});
        out.max_rel_error = std::max(out.max_rel_error, rel);
    }
    return out;
}

StencilDiagnostics stencil_diagnostics(const StencilRecordSet& records, const GridSpec& spec) {
    StencilDiagnostics out;
    out.stencil_map = Grid2D<int8_t>(spec.rows, spec.cols, -1);
    out.boundary = Grid2D<uint8_t>(spec.rows, spec.cols, 0);

    int two = 0, one = 0;
    for (const StencilRecord& rec : records.records) {
        out.stencil_map[rec.node] = rec.stencil;
        if (rec.type == UpdateType::TwoPoint)
            ++two;
        else
            ++one;
    }
    out.recorded = two + one;
    if (out.recorded == 0) return out;
    out.two_point_fraction = static_cast<double>(two) / out.recorded;
    out.one_point_fraction = static_cast<double>(one) / out.recorded;

    int boundary = 0;
    const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
    for (int r = 0; r < spec.rows; ++r)
        for (int c = 0; c < spec.cols; ++c) {
            const int8_t s = out.stencil_map(r, c);
            if (s < 0) continue;
            for (int k = 0; k < 4; ++k) {
                const int nr = r + dr[k], nc = c + dc[k];
                if (!out.stencil_map.in_bounds(nr, nc)) continue;
                const int8_t sn = out.stencil_map(nr, nc);
                if (sn >= 0 && sn != s) {
                    out.boundary(r, c) = 1;
                    ++boundary;
                    break;
                }
            }
        }
    out.boundary_fraction = static_cast<double>(boundary) / out.recorded;
    return out;
}

DirectionTestResult random_direction_test(const MetricField& g, const DriftField& b,
                                          const LossSpec& loss,
                                          const std::vector<Channel>& channels, int n_dirs,
                                          double eps, uint64_t seed) {
    if (n_dirs < 50) throw InvalidArgument("random_direction_test: need n_dirs >= 50");
    if (channels.empty()) throw InvalidArgument("random_direction_test: no channels");
    const ParamGradients adj = adjoint_gradient(g, b, loss);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const size_t n = g.g11.size();

    DirectionTestResult out;
    out.n_dirs = n_dirs;
    std::vector<Grid2D<double>> dir(channels.size(), Grid2D<double>(g.rows(), g.cols(), 0.0));
    for (int d = 0; d < n_dirs; ++d) {
        double norm_sq = 0.0;
        do {
            norm_sq = 0.0;
            for (auto& ch : dir)
                for (size_t i = 0; i < n; ++i) {
                    ch[i] = gauss(rng);
                    norm_sq += ch[i] * ch[i];
                }
        } while (norm_sq == 0.0);
        const double inv = 1.0 / std::sqrt(norm_sq);

        double analytic = 0.0;
        MetricField gp = g, gm = g;
        DriftField bp = b, bm = b;
        for (size_t k = 0; k < channels.size(); ++k)
            for (size_t i = 0; i < n; ++i) {
                const double step = dir[k][i] * inv;
                analytic += channel_value(adj, channels[k], static_cast<int>(i)) * step;
                nudge(gp, bp, channels[k], static_cast<int>(i), eps * step);
                nudge(gm, bm, channels[k], static_cast<int>(i), -eps * step);
            }
        const double fd = (loss_value(gp, bp, loss) - loss_value(gm, bm, loss)) / (2.0 * eps);
        const double denom = std::max(std::abs(fd), std::abs(analytic));
        if (denom > 0.0 && std::abs(fd - analytic) / denom < 0.10) ++out.agreeing;
    }
    out.fraction = static_cast<double>(out.agreeing) / n_dirs;
    return out;
}

StabilityReport perturbation_stability(const MetricField& g, const DriftField& b,
                                       const LossSpec& loss, double noise, int n_trials,
                                       uint64_t seed) {
    if (n_trials < 10) throw InvalidArgument("perturbation_stability: need n_trials >= 10");
    const ParamGradients base = adjoint_gradient(g, b, loss);
    const auto dot = [](const ParamGradients& a, const ParamGradients& c) {
        double d = 0.0;
        for (size_t i = 0; i < a.g11.size(); ++i)
            d += a.g11[i] * c.g11[i] + a.g12[i] * c.g12[i] + a.g22[i] * c.g22[i] +
                 a.b1[i] * c.b1[i] + a.b2[i] * c.b2[i];
        return d;
    };
    const double base_norm = std::sqrt(dot(base, base));
    StabilityReport out;
    if (base_norm == 0.0) return out;

    for (int trial = 0; trial < n_trials; ++trial) {
        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (trial + 1)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        MetricField gp = g;
        for (size_t i = 0; i < gp.g11.size(); ++i) {
            // one multiplicative factor per node, the whole tensor scales
            const double f = 1.0 + noise * gauss(rng);
            gp.g11[i] *= f;
            gp.g12[i] *= f;
            gp.g22[i] *= f;
        }
        project_spd(gp);
        const ParamGradients pg = adjoint_gradient(gp, b, loss);
        double diff_sq = 0.0;
        for (size_t i = 0; i < pg.g11.size(); ++i) {
            const double d1 = pg.g11[i] - base.g11[i];
            const double d2 = pg.g12[i] - base.g12[i];
            const double d3 = pg.g22[i] - base.g22[i];
            const double d4 = pg.b1[i] - base.b1[i];
            const double d5 = pg.b2[i] - base.b2[i];
            diff_sq += d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4 + d5 * d5;
        }
        out.l2_change += std::sqrt(diff_sq) / base_norm;
        const double pn = std::sqrt(dot(pg, pg));
        if (pn > 0.0) out.direction_change += 1.0 - dot(base, pg) / (base_norm * pn);
    }
    out.l2_change /= n_trials;
    out.direction_change /= n_trials;
    return out;
}

Grid2D<double> correlated_noise(int rows, int cols, int radius, uint64_t seed, bool normalize) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Grid2D<double> f(rows, cols, 0.0);
    for (size_t i = 0; i < f.size(); ++i) f[i] = gauss(rng);

    // two separable box-blur passes
    Grid2D<double> tmp(rows, cols, 0.0);
    for (int pass = 0; pass < 2; ++pass) {
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                double s = 0.0;
                int n = 0;
                for (int d = -radius; d <= radius; ++d)
                    if (c + d >= 0 && c + d < cols) {
                        s += f(r, c + d);
                        ++n;
                    }
                tmp(r, c) = s / n;
            }
        for (int c = 0; c < cols; ++c)
            for (int r = 0; r < rows; ++r) {
                double s = 0.0;
                int n = 0;
                for (int d = -radius; d <= radius; ++d)
                    if (r + d >= 0 && r + d < rows) {
                        s += tmp(r + d, c);
                        ++n;
                    }
                f(r, c) = s / n;
            }
    }
    if (!normalize) return f;

    double mean = 0.0;
    for (size_t i = 0; i < f.size(); ++i) mean += f[i];
    mean /= static_cast<double>(f.size());
    double var = 0.0;
    for (size_t i = 0; i < f.size(); ++i) {
        f[i] -= mean;
        var += f[i] * f[i];
    }
    const double sd = std::sqrt(var / static_cast<double>(f.size()));
    if (sd > 0.0)
        for (size_t i = 0; i < f.size(); ++i) f[i] /= sd;
    return f;
}

ScenarioKind parse_scenario_kind(const std::string& name) {
    if (name == "terrain") return ScenarioKind::Terrain;
    if (name == "drift") return ScenarioKind::Drift;
    if (name == "heterogeneous") return ScenarioKind::Heterogeneous;
    if (name == "combined") return ScenarioKind::Combined;
    if (name == "reconstruction") return ScenarioKind::Reconstruction;
    if (name == "sensitivity") return ScenarioKind::Sensitivity;
    throw UnknownScenario("unknown scenario kind: " + name);
}

namespace {

Grid2D<double> terrain_speed(int n, double alpha) {
    // Gaussian hill elevation; metric grows with slope magnitude.
    Grid2D<double> z(n, n, 0.0);
    const double cx = 0.5 * (n - 1), cy = 0.5 * (n - 1);
    const double sigma = n / 5.0, amp = n / 8.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double dx = c - cx, dy = r - cy;
            z(r, c) = amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
    Grid2D<double> g(n, n, 1.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double zx = (z(r, std::min(c + 1, n - 1)) - z(r, std::max(c - 1, 0))) /
                              (std::min(c + 1, n - 1) - std::max(c - 1, 0));
            const double zy = (z(std::min(r + 1, n - 1), c) - z(std::max(r - 1, 0), c)) /
                              (std::min(r + 1, n - 1) - std::max(r - 1, 0));
            g(r, c) = 1.0 + alpha * std::hypot(zx, zy);
        }
    return g;
}

Grid2D<double> disk_resistance(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pos(n / 10, n - 1 - n / 10);
    std::uniform_real_distribution<double> rad(n / 16.0, n / 10.0);
    Grid2D<double> g(n, n, 1.0);
    const int disks = 6;
    for (int d = 0; d < disks; ++d) {
        const int cr = pos(rng), cc = pos(rng);
        const double radius = rad(rng);
        for (int r = std::max(0, cr - static_cast<int>(radius) - 1);
             r <= std::min(n - 1, cr + static_cast<int>(radius) + 1); ++r)
            for (int c = std::max(0, cc - static_cast<int>(radius) - 1);
                 c <= std::min(n - 1, cc + static_cast<int>(radius) + 1); ++c)
                if (std::hypot(double(r - cr), double(c - cc)) <= radius) g(r, c) = 4.0;
    }
    return g;
}

MetricField iso_metric(const Grid2D<double>& g) {
    MetricField f(g.rows(), g.cols());
    f.g11 = g;
    f.g22 = g;
    return f;
}

}  // namespace

Scenario scenario(ScenarioKind kind, const ScenarioParams& p, uint64_t seed) {
    const int n = p.size;
    Scenario out;
    out.spec = GridSpec{n, n, 1.0};
    out.spec.validate();
    out.metric = MetricField(n, n, 1.0);
    out.drift = DriftField(n, n);
    out.sources = SourceMask::point(n, n, n / 2, n / 2);

    switch (kind) {
        case ScenarioKind::Terrain:
            out.metric = iso_metric(terrain_speed(n, p.alpha));
            break;
        case ScenarioKind::Drift:
            out.drift = DriftField(n, n, p.b.x, p.b.y);
            break;
        case ScenarioKind::Heterogeneous:
            out.metric = iso_metric(disk_resistance(n, seed));
            break;
        case ScenarioKind::Combined: {
            const Grid2D<double> t = terrain_speed(n, p.alpha);
            Grid2D<double> d = disk_resistance(n, seed);
            for (size_t i = 0; i < d.size(); ++i) d[i] *= t[i];
            out.metric = iso_metric(d);
            out.drift = DriftField(n, n, p.b.x, p.b.y);
            break;
        }
        case ScenarioKind::Reconstruction: {
            auto [truth, rep] = solve(out.metric, out.drift, out.sources, out.spec);
            std::vector<int> candidates;
            for (int i = 0; i < out.spec.count(); ++i)
                if (!out.sources.mask[i] && is_reached(truth.t[i])) candidates.push_back(i);
            std::mt19937_64 rng(seed);
            std::shuffle(candidates.begin(), candidates.end(), rng);
            const size_t count = static_cast<size_t>(p.density * candidates.size());

            SourceMask obs_mask(n, n);
            Grid2D<double> obs_values(n, n, 0.0);
            for (size_t k = 0; k < count; ++k) {
                obs_mask.mask[candidates[k]] = 1;
                obs_values[candidates[k]] = truth.t[candidates[k]];
            }
            auto [recon, rrep] =
                solve_from_values(out.metric, out.drift, obs_mask, obs_values, out.spec);

            // mean per-node relative error over the interpolated nodes; the
            // blind zone around the source (no observation can undercut the
            // smallest observed time) dominates this statistic
            double mean_rel = 0.0;
            int counted = 0;
            for (int i = 0; i < out.spec.count(); ++i) {
                if (obs_mask.mask[i] || out.sources.mask[i]) continue;
                if (!is_reached(recon.t[i]) || !is_reached(truth.t[i]) || truth.t[i] <= 0.0)
                    continue;
                mean_rel += std::abs(recon.t[i] - truth.t[i]) / truth.t[i];
                ++counted;
            }
            out.report = Grid2D<double>(1, 2, 0.0);
            out.report(0, 0) = static_cast<double>(count);
            out.report(0, 1) = counted > 0 ? mean_rel / counted : 0.0;
            out.has_report = true;
            break;
        }
        case ScenarioKind::Sensitivity: {
            auto [base, rep] = solve(out.metric, out.drift, out.sources, out.spec);
            const auto excl = source_exclusion(out.sources, kSourceExclusionRadius);
            out.report = Grid2D<double>(static_cast<int>(p.noise_levels.size()), 3, 0.0);
            for (size_t li = 0; li < p.noise_levels.size(); ++li) {
                const double level = p.noise_levels[li];
                double mean_err = 0.0, realized = 0.0;
                for (int trial = 0; trial < p.trials; ++trial) {
                    // nominal-level white noise, then smoothing; the blur
                    // attenuation is part of the perturbation model
                    const Grid2D<double> eta = correlated_noise(
                        n, n, 2, seed ^ (li * 1000003ull + trial + 1), /*normalize=*/false);
                    MetricField gp = out.metric;
                    double var = 0.0;
                    for (size_t i = 0; i < gp.g11.size(); ++i) {
                        const double f = 1.0 + level * eta[i];
                        var += level * eta[i] * level * eta[i];
                        gp.g11[i] *= f;
                        gp.g22[i] *= f;
                    }
                    realized += std::sqrt(var / static_cast<double>(gp.g11.size()));
                    project_spd(gp);
                    auto [tp, trep] = solve(gp, out.drift, out.sources, out.spec);
                    double sq = 0.0, ref_sq = 0.0;
                    for (int i = 0; i < out.spec.count(); ++i) {
                        if (excl[i] || !is_reached(tp.t[i]) || !is_reached(base.t[i])) continue;
                        const double e = tp.t[i] - base.t[i];
                        sq += e * e;
                        ref_sq += base.t[i] * base.t[i];
                    }
                    mean_err += ref_sq > 0.0 ? std::sqrt(sq / ref_sq) : 0.0;
                }
                out.report(static_cast<int>(li), 0) = level;
                out.report(static_cast<int>(li), 1) = mean_err / p.trials;
                out.report(static_cast<int>(li), 2) = realized / p.trials;
            }
            out.has_report = true;
            break;
        }
    }
    return out;
}

}  // namespace randers
