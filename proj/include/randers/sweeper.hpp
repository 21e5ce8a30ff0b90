#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "randers/grid.hpp"
#include "randers/stencil.hpp"

namespace randers {

enum class UpdateType : uint8_t { TwoPoint, OnePoint };

/// Best local update at one node: value, winning stencil, update type and
/// donor neighbor indices. Enumeration order fixes tie-breaking: stencils in
/// ascending index, two-point attempts before their one-point fallbacks,
/// lower donor first. Ties keep the earlier candidate.
struct NodeCandidate {
    double t0 = kUnreached;
    UpdateType type = UpdateType::OnePoint;
    int8_t stencil = -1;
    int8_t donor1 = -1;  // neighbor index 0..7
    int8_t donor2 = -1;  // -1 for one-point
    double lam1 = 0.0;
    double lam2 = 0.0;
    bool found = false;
};

/// Minimum over all in-bounds stencils at (r, c), evaluated against the
/// arrival values in `t`. Two-point candidates require both donors finite
/// and the validity conditions; otherwise each finite in-bounds donor
/// contributes a one-point candidate.
NodeCandidate best_candidate(int r, int c, const Grid2D<double>& t, const MetricField& g,
                             const DriftField& b, double h);

/// Single-node relaxation: returns the candidate if it improves the current
/// value, otherwise the current value with no donors.
NodeCandidate node_update(int r, int c, const Grid2D<double>& t, const MetricField& g,
                          const DriftField& b, double h);

struct SolveReport {
    int iterations = 0;
    std::vector<double> max_delta_history;
    bool converged = false;
};

struct SolveOptions {
    double tol = 1e-6;
    int max_iters = 50;
    // Order of the four directional passes inside one iteration; exposed so
    // sweep-order invariance is testable.
    std::array<int, 4> sweep_order = {0, 1, 2, 3};
};

/// Fast sweeping: Gauss-Seidel relaxation over four alternating directional
/// passes per iteration (columns left-to-right, rows top-to-bottom, columns
/// right-to-left, rows bottom-to-top) until max |dT| < tol.
std::pair<ArrivalField, SolveReport> solve(const MetricField& g, const DriftField& b,
                                           const SourceMask& src, const GridSpec& spec,
                                           const SolveOptions& opt = {});

/// Same fixed point via simultaneous (Jacobi) updates from the previous
/// iterate; iteration count grows with grid diameter.
std::pair<ArrivalField, SolveReport> solve_jacobi(const MetricField& g, const DriftField& b,
                                                  const SourceMask& src, const GridSpec& spec,
                                                  const SolveOptions& opt = {});

/// Generalization used for wavefront reconstruction: fixed nodes hold the
/// given arrival values instead of zero.
std::pair<ArrivalField, SolveReport> solve_from_values(const MetricField& g, const DriftField& b,
                                                       const SourceMask& fixed,
                                                       const Grid2D<double>& fixed_values,
                                                       const GridSpec& spec,
                                                       const SolveOptions& opt = {});

/// Default Jacobi iteration budget for a grid; the information front moves
/// roughly one cell per pass.
inline int jacobi_iteration_budget(const GridSpec& spec) {
    return 5 * std::max(spec.rows, spec.cols) + 50;
}

}  // namespace randers
