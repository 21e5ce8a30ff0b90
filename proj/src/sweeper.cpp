#include "randers/sweeper.hpp"

#include <algorithm>
#include <cmath>

namespace randers {

NodeCandidate best_candidate(int r, int c, const Grid2D<double>& t, const MetricField& g,
                             const DriftField& b, double h) {
    NodeCandidate best;
    const Sym2 gn = g.at(r, c);
    const Vec2 bn = b.at(r, c);
    const int rows = t.rows(), cols = t.cols();

    double tn[StencilTable::kNeighbors];
    bool in[StencilTable::kNeighbors];
    for (int k = 0; k < StencilTable::kNeighbors; ++k) {
        const int nr = r + StencilTable::dr[k];
        const int nc = c + StencilTable::dc[k];
        in[k] = nr >= 0 && nr < rows && nc >= 0 && nc < cols;
        tn[k] = in[k] ? t(nr, nc) : kUnreached;
    }

    auto consider_one_point = [&](int stencil, int donor) {
        if (!in[donor] || !is_reached(tn[donor])) return;
        const double t0 = one_point_update(tn[donor], StencilTable::displacement(donor, h), gn, bn);
        if (best.found && !(t0 < best.t0)) return;
        best.found = true;
        best.t0 = t0;
        best.type = UpdateType::OnePoint;
        best.stencil = static_cast<int8_t>(stencil);
        best.donor1 = static_cast<int8_t>(donor);
        best.donor2 = -1;
        best.lam1 = best.lam2 = 0.0;
    };

    for (int k = 0; k < StencilTable::kNeighbors; ++k) {
        const int k2 = (k + 1) % StencilTable::kNeighbors;
        if (in[k] && in[k2] && is_reached(tn[k]) && is_reached(tn[k2])) {
            const TwoPointResult tp =
                two_point_update(tn[k], tn[k2], StencilTable::displacement(k, h),
                                 StencilTable::displacement(k2, h), gn, bn);
            if (tp.valid) {
                if (!best.found || tp.t0 < best.t0) {
                    best.found = true;
                    best.t0 = tp.t0;
                    best.type = UpdateType::TwoPoint;
                    best.stencil = static_cast<int8_t>(k);
                    best.donor1 = static_cast<int8_t>(k);
                    best.donor2 = static_cast<int8_t>(k2);
                    best.lam1 = tp.lam1;
                    best.lam2 = tp.lam2;
                }
                continue;
            }
        }
        consider_one_point(k, k);
        consider_one_point(k, k2);
    }
    return best;
}

NodeCandidate node_update(int r, int c, const Grid2D<double>& t, const MetricField& g,
                          const DriftField& b, double h) {
    NodeCandidate cand = best_candidate(r, c, t, g, b, h);
    if (!cand.found || !(cand.t0 < t(r, c))) {
        NodeCandidate keep;
        keep.t0 = t(r, c);
        return keep;
    }
    return cand;
}

namespace {

void check_dims(const MetricField& g, const DriftField& b, const SourceMask& src,
                const GridSpec& spec) {
    spec.validate();
    if (!g.g11.same_shape(spec.rows, spec.cols) || !g.g12.same_shape(spec.rows, spec.cols) ||
        !g.g22.same_shape(spec.rows, spec.cols) || !b.b1.same_shape(spec.rows, spec.cols) ||
        !b.b2.same_shape(spec.rows, spec.cols) || !src.mask.same_shape(spec.rows, spec.cols))
        throw DimensionMismatch("solve: field dimensions disagree with grid spec");
    src.validate();
}

struct Sweeper {
    const MetricField& g;
    const DriftField& b;
    const Grid2D<uint8_t>& fixed;
    double h;

    void relax(int r, int c, Grid2D<double>& t) const {
        if (fixed(r, c)) return;
        const NodeCandidate cand = best_candidate(r, c, t, g, b, h);
        if (cand.found && cand.t0 < t(r, c)) t(r, c) = cand.t0;
    }

    // The four directional passes. Outer loops follow the stated column/row
    // orders; inner orders are chosen so the four passes cover the four
    // characteristic quadrants.
    void sweep(int dir, Grid2D<double>& t) const {
        const int rows = t.rows(), cols = t.cols();
        switch (dir) {
            case 0:  // columns left to right
                for (int c = 0; c < cols; ++c)
                    for (int r = 0; r < rows; ++r) relax(r, c, t);
                break;
            case 1:  // rows top to bottom
                for (int r = 0; r < rows; ++r)
                    for (int c = cols - 1; c >= 0; --c) relax(r, c, t);
                break;
            case 2:  // columns right to left
                for (int c = cols - 1; c >= 0; --c)
                    for (int r = rows - 1; r >= 0; --r) relax(r, c, t);
                break;
            default:  // rows bottom to top
                for (int r = rows - 1; r >= 0; --r)
                    for (int c = 0; c < cols; ++c) relax(r, c, t);
                break;
        }
    }
};

Grid2D<double> initial_field(const SourceMask& src, const Grid2D<double>* values,
                             const GridSpec& spec) {
    Grid2D<double> t(spec.rows, spec.cols, kUnreached);
    for (int r = 0; r < spec.rows; ++r)
        for (int c = 0; c < spec.cols; ++c)
            if (src.is_source(r, c)) t(r, c) = values ? (*values)(r, c) : 0.0;
    return t;
}

std::pair<ArrivalField, SolveReport> run_sweeping(const MetricField& g, const DriftField& b,
                                                  const SourceMask& src,
                                                  const Grid2D<double>* values,
                                                  const GridSpec& spec, const SolveOptions& opt) {
    check_dims(g, b, src, spec);
    ArrivalField out(spec.rows, spec.cols);
    out.t = initial_field(src, values, spec);
    const Sweeper sw{g, b, src.mask, spec.h};

    SolveReport report;
    Grid2D<double> prev = out.t;
    for (int it = 0; it < opt.max_iters; ++it) {
        for (int d : opt.sweep_order) sw.sweep(d, out.t);
        double max_delta = 0.0;
        for (size_t i = 0; i < out.t.size(); ++i)
            max_delta = std::max(max_delta, std::abs(out.t[i] - prev[i]));
        report.max_delta_history.push_back(max_delta);
        report.iterations = it + 1;
        if (max_delta < opt.tol) {
            report.converged = true;
            break;
        }
        prev = out.t;
    }
    return {std::move(out), report};
}

}  // namespace

std::pair<ArrivalField, SolveReport> solve(const MetricField& g, const DriftField& b,
                                           const SourceMask& src, const GridSpec& spec,
                                           const SolveOptions& opt) {
    return run_sweeping(g, b, src, nullptr, spec, opt);
}

std::pair<ArrivalField, SolveReport> solve_from_values(const MetricField& g, const DriftField& b,
                                                       const SourceMask& fixed,
                                                       const Grid2D<double>& fixed_values,
                                                       const GridSpec& spec,
                                                       const SolveOptions& opt) {
    return run_sweeping(g, b, fixed, &fixed_values, spec, opt);
}

std::pair<ArrivalField, SolveReport> solve_jacobi(const MetricField& g, const DriftField& b,
                                                  const SourceMask& src, const GridSpec& spec,
                                                  const SolveOptions& opt) {
    check_dims(g, b, src, spec);
    ArrivalField out(spec.rows, spec.cols);
    out.t = initial_field(src, nullptr, spec);

    SolveReport report;
    Grid2D<double> next = out.t;
    for (int it = 0; it < opt.max_iters; ++it) {
        double max_delta = 0.0;
        for (int r = 0; r < spec.rows; ++r)
            for (int c = 0; c < spec.cols; ++c) {
                if (src.is_source(r, c)) continue;
                const NodeCandidate cand = best_candidate(r, c, out.t, g, b, spec.h);
                const double cur = out.t(r, c);
                const double v = cand.found ? std::min(cur, cand.t0) : cur;
                next(r, c) = v;
                max_delta = std::max(max_delta, std::abs(v - cur));
            }
        std::swap(out.t, next);
        report.max_delta_history.push_back(max_delta);
        report.iterations = it + 1;
        if (max_delta < opt.tol) {
            report.converged = true;
            break;
        }
    }
    return {std::move(out), report};
}

}  // namespace randers
