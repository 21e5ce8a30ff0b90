#pragma once

#include <vector>

#include "randers/grid.hpp"

namespace randers {

struct ProjectionConfig {
    double eps_min = 1e-3;     // minimum metric eigenvalue
    double lambda_max = 1e3;   // maximum metric eigenvalue
    double tau = 0.95;         // drift norm cap, realizes ||b||_{G^-1} < 1
    double euclid_cap = 10.0;  // pre-clip on the Euclidean drift norm

    void validate() const {
        if (!(eps_min > 0.0) || !(eps_min < lambda_max))
            throw InvalidArgument("ProjectionConfig: need 0 < eps_min < lambda_max");
        if (!(tau > 0.0) || !(tau < 1.0))
            throw InvalidArgument("ProjectionConfig: need 0 < tau < 1");
    }
};

/// Clamps per-node metric eigenvalues to [eps_min, lambda_max] through the
/// closed-form eigendecomposition and reconstructs G = U D U'. Nodes already
/// inside the bounds are passed through untouched, so the projection is
/// idempotent and preserves feasible inputs exactly.
void project_spd(Grid2D<double>& g11, Grid2D<double>& g12, Grid2D<double>& g22,
                 const ProjectionConfig& cfg = {});
inline void project_spd(MetricField& g, const ProjectionConfig& cfg = {}) {
    project_spd(g.g11, g.g12, g.g22, cfg);
}

/// Drift feasibility: clip the Euclidean norm to euclid_cap, then rescale so
/// ||b||_{G^-1} <= tau, preserving direction. Expects G already projected.
void project_drift(Grid2D<double>& b1, Grid2D<double>& b2, const Grid2D<double>& g11,
                   const Grid2D<double>& g12, const Grid2D<double>& g22,
                   const ProjectionConfig& cfg = {});
inline void project_drift(DriftField& b, const MetricField& g, const ProjectionConfig& cfg = {}) {
    project_drift(b.b1, b.b2, g.g11, g.g12, g.g22, cfg);
}

/// ||b||^2_{G^-1} evaluated per node via
/// (b1^2 g22 - 2 b1 b2 g12 + b2^2 g11) / det(G).
double drift_norm_sq(double b1, double b2, double g11, double g12, double g22);

enum class TvVariant { Frobenius, LogEuclidean, Drift };

/// Smoothed total variation of a 1..3-channel field with forward differences
/// and zero-flux boundaries:
///   value = sum_nodes ( sqrt( sum_c w_c (dx_c^2 + dy_c^2) + eps_tv^2 ) - eps_tv )
/// so spatially constant fields score exactly zero. Channel weights are 1
/// except the off-diagonal metric channel which counts twice (Frobenius
/// variant on 3 channels). The Log-Euclidean variant maps SPD triples through
/// the closed-form matrix logarithm before differencing; its gradient chains
/// back through that map.
struct TvResult {
    double value = 0.0;
    std::vector<Grid2D<double>> grad;
};
TvResult tv_value_grad(const std::vector<Grid2D<double>>& channels, TvVariant variant,
                       double eps_tv = 1e-8);

/// L2 penalty: value = 0.5 * weight * sum field^2, gradient = weight * field.
struct TikhonovResult {
    double value = 0.0;
    std::vector<Grid2D<double>> grad;
};
TikhonovResult tikhonov_value_grad(const std::vector<Grid2D<double>>& channels, double weight);

}  // namespace randers
