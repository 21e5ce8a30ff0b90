#pragma once

#include <filesystem>
#include <limits>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "randers/feasibility.hpp"
#include "randers/grid.hpp"
#include "randers/oracle.hpp"
#include "randers/stencil.hpp"

namespace testutil {

using namespace randers;

inline std::filesystem::path temp_file(const std::string& name) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() / "randers_tests";
    std::filesystem::create_directories(dir);
    return dir / (std::to_string(++counter) + "_" + name);
}

inline MetricField iso_metric(int n, double g) { return MetricField(n, n, g); }

/// Independent upper-bound oracle: Dijkstra over the 8-connected graph where
/// stepping into node v from neighbor u costs m.b(v) + sqrt(m' G(v) m) with
/// m the displacement from v to u. Discrete one-point chains are exactly
/// these paths, so the sweeping solution can never exceed this distance.
inline Grid2D<double> dijkstra_distance(const MetricField& g, const DriftField& b,
                                        const SourceMask& src, const GridSpec& spec) {
    const int rows = spec.rows, cols = spec.cols;
    Grid2D<double> dist(rows, cols, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (int i = 0; i < spec.count(); ++i)
        if (src.mask[i]) {
            dist[i] = 0.0;
            heap.push({0.0, i});
        }
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        const int ur = u / cols, uc = u % cols;
        for (int k = 0; k < StencilTable::kNeighbors; ++k) {
            const int vr = ur + StencilTable::dr[k], vc = uc + StencilTable::dc[k];
            if (vr < 0 || vr >= rows || vc < 0 || vc >= cols) continue;
            const int v = vr * cols + vc;
            // displacement from v back to u
            const Vec2 m{(uc - vc) * spec.h, (ur - vr) * spec.h};
            const double w = m.dot(b.at(vr, vc)) + std::sqrt(g.at(vr, vc).quad(m));
            if (dist[u] + w < dist[v]) {
                dist[v] = dist[u] + w;
                heap.push({dist[v], v});
            }
        }
    }
    return dist;
}

/// Random feasible (metric, drift) pair: smoothly varying media in the
/// moderate-anisotropy regime the solver targets, made feasible by the
/// projections.
inline std::pair<MetricField, DriftField> random_feasible_fields(int n, uint64_t seed,
                                                                 double drift_scale = 0.2) {
    MetricField g(n, n, 1.0);
    DriftField b(n, n);
    const Grid2D<double> e1 = correlated_noise(n, n, 3, seed * 5 + 1);
    const Grid2D<double> e2 = correlated_noise(n, n, 3, seed * 5 + 2);
    const Grid2D<double> e3 = correlated_noise(n, n, 3, seed * 5 + 3);
    const Grid2D<double> e4 = correlated_noise(n, n, 3, seed * 5 + 4);
    const Grid2D<double> e5 = correlated_noise(n, n, 3, seed * 5 + 5);
    for (size_t i = 0; i < g.g11.size(); ++i) {
        g.g11[i] = 1.0 + 0.35 * e1[i];
        g.g12[i] = 0.2 * e2[i];
        g.g22[i] = 1.0 + 0.35 * e3[i];
        b.b1[i] = drift_scale * e4[i];
        b.b2[i] = drift_scale * e5[i];
    }
    ProjectionConfig cfg;
    cfg.eps_min = 0.5;
    cfg.lambda_max = 2.5;
    cfg.tau = std::min(0.95, 2.0 * drift_scale);
    project_spd(g, cfg);
    project_drift(b, g, cfg);
    return {g, b};
}

}  // namespace testutil
