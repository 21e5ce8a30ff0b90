#pragma once

#include <vector>

#include "randers/observations.hpp"
#include "randers/sweeper.hpp"

namespace randers {

/// Converged update provenance for one node: which stencil won, the update
/// type, donor nodes, and the cached local quantities the Jacobian and
/// parameter partials are built from.
struct StencilRecord {
    int node = -1;
    UpdateType type = UpdateType::OnePoint;
    int8_t stencil = -1;
    int donor[2] = {-1, -1};  // linear node indices, donor[1] < 0 for one-point
    Vec2 m1, m2;              // physical offsets to the donors

    // two-point caches: Q = (M'GM)^-1 and u = s - T0*1
    double q11 = 0.0, q12 = 0.0, q22 = 0.0;
    double u1 = 0.0, u2 = 0.0;

    // one-point caches: r = Ti + mi.b - T0 and e = mi' G mi
    double r_edge = 0.0;
    double e_edge = 0.0;
};

struct StencilRecordSet {
    std::vector<StencilRecord> records;
    Grid2D<int> record_index;  // node -> position in records, -1 if none
    int two_point_count = 0;
    int one_point_count = 0;
};

/// Re-runs the local update selection at the converged arrival values and
/// records the winner per finite non-source node, with the forward pass's
/// tie-breaking. Throws InconsistentFixedPoint when a recomputed value
/// disagrees with the stored field by more than 100*tol.
StencilRecordSet identify_stencils(const ArrivalField& t, const MetricField& g,
                                   const DriftField& b, const SourceMask& src,
                                   const GridSpec& spec, double tol = 1e-6);

/// Residual partials with respect to the node's own time and its donors'.
/// Two-point: dR/dT0 = -2*1'Qu, dR/dTk = 2*ek'Qu. One-point: dR/dT0 = -2r,
/// dR/dTi = 2r. A vanishing diagonal is clamped to 1e-12 of the local scale
/// with its sign kept; `clamped` reports that this happened.
struct JacobianEntries {
    double diag = 0.0;
    double donor[2] = {0.0, 0.0};
    bool clamped = false;
};
JacobianEntries jacobian_entries(const StencilRecord& rec);

struct AdjointField {
    Grid2D<double> lambda;
    int clamped_diagonals = 0;
};

/// Solves J'lambda = g by one reverse back-substitution pass over nodes in
/// strictly decreasing arrival time (ties broken by node index). Sources and
/// unreached nodes carry lambda = 0.
AdjointField solve_adjoint(const StencilRecordSet& records, const ArrivalField& t,
                           const Grid2D<double>& loss_grad);

/// Loss gradients with respect to the five parameter channels, accumulated
/// per node as -lambda_i * dR_i/dtheta. The symmetric metric partial lands in
/// (g11, g12, g22) with both off-diagonal entries summed into g12.
struct ParamGradients {
    Grid2D<double> g11, g12, g22, b1, b2;

    ParamGradients() = default;
    ParamGradients(int rows, int cols)
        : g11(rows, cols, 0.0),
          g12(rows, cols, 0.0),
          g22(rows, cols, 0.0),
          b1(rows, cols, 0.0),
          b2(rows, cols, 0.0) {}
};
ParamGradients param_gradients(const StencilRecordSet& records, const AdjointField& adj);

/// dL/dT for the squared-error data term: (T - That) on observed reached
/// nodes, zero elsewhere. Observed nodes the front never reached contribute
/// nothing and are counted in the diagnostic.
struct LossGrad {
    Grid2D<double> grad;
    double loss = 0.0;
    int unreached_observed = 0;
};
LossGrad loss_grad_mse(const ArrivalField& t, const ObservationSet& obs);

}  // namespace randers
