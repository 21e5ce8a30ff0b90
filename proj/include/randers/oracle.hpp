#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "randers/adjoint.hpp"
#include "randers/inversion.hpp"

namespace randers {

/// Closed-form arrival times for constant coefficients: straight rays are
/// optimal, so T(x) = min over sources of sqrt(d'Gd) - b.d with d = x - x0.
ArrivalField analytic_distance(const GridSpec& spec,
                               const std::vector<std::pair<int, int>>& source_nodes,
                               const Sym2& g, const Vec2& b);

enum class StudyCase { Isotropic, Anisotropic, Rotated, Combined };

struct StudyRow {
    int size = 0;
    double h = 0.0;
    double l2 = 0.0;      // rms error
    double linf = 0.0;    // max error
    double rel_l2 = 0.0;  // ||err|| / ||ref||
    int iterations = 0;
    double seconds = 0.0;
};

struct StudyReport {
    std::vector<StudyRow> rows;
    double alpha = 0.0;  // log-log slope of l2 vs h; NaN when not fitted
};

/// Grid-refinement study against the analytic solution (isotropic, diagonal
/// anisotropic, rotated anisotropic), or a two-grid Richardson comparison for
/// the combined metric+drift case where no closed form exists. The rate fit
/// needs at least three sizes.
StudyReport convergence_study(const std::vector<int>& sizes, StudyCase study_case);

/// Per-node PDE residual | ||grad T + b||_{G^-1} - 1 | from central
/// differences, on interior reached nodes at least two cells from any source.
struct ResidualReport {
    Grid2D<double> residual;
    Grid2D<uint8_t> valid;
    double mean = 0.0;
    double max = 0.0;
    int count = 0;
};
ResidualReport eikonal_residual(const ArrivalField& t, const MetricField& g, const DriftField& b,
                                const SourceMask& src, const GridSpec& spec);

/// Data-term loss spec shared by the finite-difference oracle and the
/// gradient experiments: observation sets over a grid, solved fresh per
/// evaluation.
struct LossSpec {
    GridSpec spec;
    std::vector<ObservationSet> obs;
    double tol = 1e-6;
    int max_iters = 50;
};

enum class Channel { G11, G12, G22, B1, B2 };

double loss_value(const MetricField& g, const DriftField& b, const LossSpec& loss);

/// Full-field data gradient via the adjoint path (all five channels).
ParamGradients adjoint_gradient(const MetricField& g, const DriftField& b, const LossSpec& loss);

/// Central finite difference of the loss in one site/channel; every
/// evaluation is a complete forward solve.
double fd_gradient(const MetricField& g, const DriftField& b, Channel channel, int node,
                   double eps, const LossSpec& loss);

/// True when the probe perturbation leaves every node's winning stencil
/// unchanged between the +eps and -eps solves.
bool stencil_stable(const MetricField& g, const DriftField& b, Channel channel, int node,
                    double eps, const LossSpec& loss);

struct GradCheckPoint {
    int node = -1;
    Channel channel = Channel::G11;
    double fd = 0.0;
    double adjoint = 0.0;
    double rel_error = 0.0;
};

struct GradCheckResult {
    std::vector<GradCheckPoint> points;
    double max_rel_error = 0.0;
    int skipped_unstable = 0;
    int skipped_zero = 0;
};

/// Compares adjoint against central finite differences at stencil-stable
/// random interior nodes until n_points qualify (or candidates run out).
GradCheckResult gradient_check(const MetricField& g, const DriftField& b, const LossSpec& loss,
                               const std::vector<Channel>& channels, int n_points, double eps,
                               uint64_t seed);

struct StencilDiagnostics {
    Grid2D<int8_t> stencil_map;  // winning stencil index, -1 where no record
    Grid2D<uint8_t> boundary;    // 4-neighborhood sees a different stencil
    double two_point_fraction = 0.0;
    double one_point_fraction = 0.0;
    double boundary_fraction = 0.0;
    int recorded = 0;
};
StencilDiagnostics stencil_diagnostics(const StencilRecordSet& records, const GridSpec& spec);

/// Fraction of random unit directions in parameter space whose finite
/// difference directional derivative agrees with g.d to within 10 percent.
struct DirectionTestResult {
    int n_dirs = 0;
    int agreeing = 0;
    double fraction = 0.0;
};
DirectionTestResult random_direction_test(const MetricField& g, const DriftField& b,
                                          const LossSpec& loss,
                                          const std::vector<Channel>& channels, int n_dirs,
                                          double eps, uint64_t seed);

/// Gradient stability under per-node multiplicative Gaussian noise on the
/// metric tensor. `direction_change` is the mean of 1 - cos(g', g), the
/// quantity that matters for subgradient descent; `l2_change` is the mean of
/// ||g' - g|| / ||g||, which also carries the orthogonal flip noise.
struct StabilityReport {
    double direction_change = 0.0;
    double l2_change = 0.0;
};
StabilityReport perturbation_stability(const MetricField& g, const DriftField& b,
                                       const LossSpec& loss, double noise, int n_trials,
                                       uint64_t seed);

enum class ScenarioKind { Terrain, Drift, Heterogeneous, Combined, Reconstruction, Sensitivity };

ScenarioKind parse_scenario_kind(const std::string& name);

struct ScenarioParams {
    int size = 100;
    double alpha = 1.0;            // terrain slope sensitivity
    Vec2 b{0.3, 0.0};              // drift kinds
    double density = 0.0878;       // reconstruction observation density
    std::vector<double> noise_levels = {0.0, 0.05, 0.1, 0.2, 0.3, 0.5};
    int trials = 3;                // sensitivity trials per level
};

struct Scenario {
    GridSpec spec;
    MetricField metric;
    DriftField drift;
    SourceMask sources;
    Grid2D<double> report;  // kind-specific rows, empty when not applicable
    bool has_report = false;
};

Scenario scenario(ScenarioKind kind, const ScenarioParams& params, uint64_t seed);

/// Spatially correlated noise: white Gaussian noise put through two
/// separable box-blur passes. With `normalize` the field is rescaled back to
/// zero mean and unit variance; without it the blur attenuation is kept
/// (pointwise std shrinks by roughly the kernel width).
Grid2D<double> correlated_noise(int rows, int cols, int radius, uint64_t seed,
                                bool normalize = true);

}  // namespace randers
