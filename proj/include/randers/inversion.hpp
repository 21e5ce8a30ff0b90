#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "randers/adjoint.hpp"
#include "randers/feasibility.hpp"
#include "randers/observations.hpp"

namespace randers {

enum class Parameterization { Isotropic, Diagonal, Full, DriftOnly, Joint };
enum class OptimizerKind { Adam, Gd };

struct InverseConfig {
    Parameterization param = Parameterization::Isotropic;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double step_g = 1e-2;
    double step_b = 5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip_norm = 1.0;
    double lambda_g = 0.0;
    double lambda_b = 0.0;
    TvVariant tv_variant = TvVariant::Frobenius;
    int iters = 300;
    uint64_t seed = 42;
    ProjectionConfig projection;
    double solve_tol = 1e-6;
    int solve_max_iters = 50;
    // fixed factor-0.5 step drop when the loss plateaus
    int plateau_window = 25;
    double plateau_factor = 0.5;
    double unreached_penalty_cap = 1e4;

    void validate() const {
        if (!(step_g > 0.0) || !(step_b > 0.0))
            throw InvalidArgument("InverseConfig: steps must be positive");
        if (iters < 1) throw InvalidArgument("InverseConfig: iters must be >= 1");
    }
};

/// Regularized least-squares objective over one or more sources and its
/// full-field gradient. Solver non-convergence aborts with NotConverged.
struct Objective {
    double loss = 0.0;
    double data_loss = 0.0;
    double reg_loss = 0.0;
    ParamGradients grad;
    int unreached_observed = 0;
};
Objective objective_and_grad(const MetricField& g, const DriftField& b,
                             const std::vector<ObservationSet>& obs, const GridSpec& spec,
                             const InverseConfig& cfg);

/// Scales the stacked gradient so its global L2 norm is at most max_norm.
/// Returns the pre-clip norm.
double clip_global_norm(std::vector<Grid2D<double>*> grads, double max_norm);

struct AdamState {
    std::vector<Grid2D<double>> m, v;
    long t = 0;
};

/// One Adam step over a stack of parameter channels: global-norm clipping,
/// then the bias-corrected moment update. `steps` holds the per-channel
/// learning rate.
void adam_step(AdamState& state, std::vector<Grid2D<double>*> params,
               std::vector<Grid2D<double>> grads, const std::vector<double>& steps,
               const InverseConfig& cfg);

/// Plain gradient-descent step with the same clipping.
void gd_step(std::vector<Grid2D<double>*> params, std::vector<Grid2D<double>> grads,
             const std::vector<double>& steps, const InverseConfig& cfg);

struct TruthFields {
    std::optional<MetricField> metric;
    std::optional<DriftField> drift;
};

struct RecoveryResult {
    MetricField metric;
    DriftField drift;
    Grid2D<double> iso_g;  // populated in isotropic mode
    std::vector<double> loss_history;
    std::vector<double> error_history;  // empty without ground truth
    int iterations = 0;
    double final_error = -1.0;
    int unreached_observed_total = 0;
    int solver_iterations_total = 0;
};

/// Projected first-order recovery loop: objective/gradient, optimizer step,
/// feasibility projection, per-iteration histories. Initial fields default to
/// g = 1, b = 0 when not supplied. Throws DivergedLoss when the loss blows up
/// beyond 1e6x its initial value.
RecoveryResult recover(const std::vector<ObservationSet>& obs, const GridSpec& spec,
                       const InverseConfig& cfg, std::optional<MetricField> init_metric = {},
                       std::optional<DriftField> init_drift = {},
                       const TruthFields* truth = nullptr);

/// Forward-solves the true fields per source and samples
/// floor(density * reached-non-source-count) nodes uniformly without
/// replacement; Gaussian noise with std = noise_level * std(T over the
/// sample) is added and the result clamped at zero.
std::vector<ObservationSet> generate_observations(const MetricField& g, const DriftField& b,
                                                  const std::vector<SourceMask>& sources,
                                                  const GridSpec& spec, double density,
                                                  double noise_level, uint64_t seed);

/// Joint isotropic recovery benchmark over k nested source sets on a
/// piecewise-constant two-region medium, 7 percent observations per source
/// by default. Returns the error-versus-k table.
struct MultiSourceRow {
    int k = 0;
    int total_observations = 0;
    double error = 0.0;
};
std::vector<MultiSourceRow> multi_source_recover(const std::vector<int>& ks, double density,
                                                 const InverseConfig& cfg, int grid_size = 64,
                                                 uint64_t seed = 42);

/// ||est - truth||_2 / ||truth||_2 over stacked channels.
double relative_error(const std::vector<const Grid2D<double>*>& est,
                      const std::vector<const Grid2D<double>*>& truth);

}  // namespace randers
