#include "randers/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace randers {

namespace {

void accumulate(ParamGradients& acc, const ParamGradients& add) {
    for (size_t i = 0; i < acc.g11.size(); ++i) {
        acc.g11[i] += add.g11[i];
        acc.g12[i] += add.g12[i];
        acc.g22[i] += add.g22[i];
        acc.b1[i] += add.b1[i];
        acc.b2[i] += add.b2[i];
    }
}

}  // namespace

Objective objective_and_grad(const MetricField& g, const DriftField& b,
                             const std::vector<ObservationSet>& obs, const GridSpec& spec,
                             const InverseConfig& cfg) {
    Objective out;
    out.grad = ParamGradients(spec.rows, spec.cols);
    SolveOptions sopt;
    sopt.tol = cfg.solve_tol;
    sopt.max_iters = cfg.solve_max_iters;

    for (const ObservationSet& o : obs) {
        auto [t, report] = solve(g, b, o.sources, spec, sopt);
        if (!report.converged)
            throw NotConverged("objective_and_grad: forward solve did not converge");
        const LossGrad lg = loss_grad_mse(t, o);
        out.data_loss += lg.loss;
        out.unreached_observed += lg.unreached_observed;
        if (lg.unreached_observed > 0) {
            // push the front outward: unreached observations pay a flat cap penalty
            for (size_t i = 0; i < t.t.size(); ++i)
                if (o.observed[i] && !is_reached(t.t[i])) {
                    const double d = cfg.unreached_penalty_cap - o.values[i];
                    out.data_loss += 0.5 * d * d;
                }
        }
        const StencilRecordSet records = identify_stencils(t, g, b, o.sources, spec, cfg.solve_tol);
        const AdjointField adj = solve_adjoint(records, t, lg.grad);
        accumulate(out.grad, param_gradients(records, adj));
    }

    if (cfg.lambda_g != 0.0) {
        const TvResult tv = tv_value_grad({g.g11, g.g12, g.g22}, cfg.tv_variant);
        out.reg_loss += cfg.lambda_g * tv.value;
        for (size_t i = 0; i < out.grad.g11.size(); ++i) {
            out.grad.g11[i] += cfg.lambda_g * tv.grad[0][i];
            out.grad.g12[i] += cfg.lambda_g * tv.grad[1][i];
            out.grad.g22[i] += cfg.lambda_g * tv.grad[2][i];
        }
    }
    if (cfg.lambda_b != 0.0) {
        const TvResult tv = tv_value_grad({b.b1, b.b2}, TvVariant::Drift);
        out.reg_loss += cfg.lambda_b * tv.value;
        for (size_t i = 0; i < out.grad.b1.size(); ++i) {
            out.grad.b1[i] += cfg.lambda_b * tv.grad[0][i];
            out.grad.b2[i] += cfg.lambda_b * tv.grad[1][i];
        }
    }
    out.loss = out.data_loss + out.reg_loss;
    return out;
}

double clip_global_norm(std::vector<Grid2D<double>*> grads, double max_norm) {
    double sq = 0.0;
    for (const auto* g : grads)
        for (size_t i = 0; i < g->size(); ++i) sq += (*g)[i] * (*g)[i];
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double f = max_norm / norm;
        for (auto* g : grads)
            for (size_t i = 0; i < g->size(); ++i) (*g)[i] *= f;
    }
    return norm;
}

void adam_step(AdamState& state, std::vector<Grid2D<double>*> params,
               std::vector<Grid2D<double>> grads, const std::vector<double>& steps,
               const InverseConfig& cfg) {
    std::vector<Grid2D<double>*> gp;
    gp.reserve(grads.size());
    for (auto& g : grads) gp.push_back(&g);
    clip_global_norm(gp, cfg.grad_clip_norm);

    if (state.m.empty()) {
        for (const auto* p : params) {
            state.m.emplace_back(p->rows(), p->cols(), 0.0);
            state.v.emplace_back(p->rows(), p->cols(), 0.0);
        }
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));

    for (size_t k = 0; k < params.size(); ++k) {
        Grid2D<double>& p = *params[k];
        Grid2D<double>& m = state.m[k];
        Grid2D<double>& v = state.v[k];
        const Grid2D<double>& g = grads[k];
        for (size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            p[i] -= steps[k] * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
        }
    }
}

void gd_step(std::vector<Grid2D<double>*> params, std::vector<Grid2D<double>> grads,
             const std::vector<double>& steps, const InverseConfig& cfg) {
    std::vector<Grid2D<double>*> gp;
    gp.reserve(grads.size());
    for (auto& g : grads) gp.push_back(&g);
    clip_global_norm(gp, cfg.grad_clip_norm);
    for (size_t k = 0; k < params.size(); ++k)
        for (size_t i = 0; i < params[k]->size(); ++i) (*params[k])[i] -= steps[k] * grads[k][i];
}

double relative_error(const std::vector<const Grid2D<double>*>& est,
                      const std::vector<const Grid2D<double>*>& truth) {
    double num = 0.0, den = 0.0;
    for (size_t k = 0; k < est.size(); ++k)
        for (size_t i = 0; i < est[k]->size(); ++i) {
            const double d = (*est[k])[i] - (*truth[k])[i];
            num += d * d;
            den += (*truth[k])[i] * (*truth[k])[i];
        }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

namespace {

// Owns the optimized channels and maps between them and the full fields.
struct ParamView {
    Parameterization mode;
    int rows = 0, cols = 0;
    std::vector<Grid2D<double>> channels;
    MetricField fixed_metric;  // DriftOnly
    DriftField fixed_drift;    // metric-only modes

    static ParamView make(Parameterization mode, const GridSpec& spec,
                          const std::optional<MetricField>& init_g,
                          const std::optional<DriftField>& init_b) {
        ParamView pv;
        pv.mode = mode;
        pv.rows = spec.rows;
        pv.cols = spec.cols;
        const MetricField gi = init_g ? *init_g : MetricField(spec.rows, spec.cols, 1.0);
        const DriftField bi = init_b ? *init_b : DriftField(spec.rows, spec.cols);
        switch (mode) {
            case Parameterization::Isotropic:
                pv.channels = {gi.g11};
                pv.fixed_drift = bi;
                break;
            case Parameterization::Diagonal:
                pv.channels = {gi.g11, gi.g22};
                pv.fixed_drift = bi;
                break;
            case Parameterization::Full:
                pv.channels = {gi.g11, gi.g12, gi.g22};
                pv.fixed_drift = bi;
                break;
            case Parameterization::DriftOnly:
                pv.channels = {bi.b1, bi.b2};
                pv.fixed_metric = gi;
                break;
            case Parameterization::Joint:
                pv.channels = {gi.g11, gi.g12, gi.g22, bi.b1, bi.b2};
                break;
        }
        return pv;
    }

    void expand(MetricField& g, DriftField& b) const {
        switch (mode) {
            case Parameterization::Isotropic:
                g.g11 = channels[0];
                g.g12 = Grid2D<double>(rows, cols, 0.0);
                g.g22 = channels[0];
                b = fixed_drift;
                break;
            case Parameterization::Diagonal:
                g.g11 = channels[0];
                g.g12 = Grid2D<double>(rows, cols, 0.0);
                g.g22 = channels[1];
                b = fixed_drift;
                break;
            case Parameterization::Full:
                g.g11 = channels[0];
                g.g12 = channels[1];
                g.g22 = channels[2];
                b = fixed_drift;
                break;
            case Parameterization::DriftOnly:
                g = fixed_metric;
                b.b1 = channels[0];
                b.b2 = channels[1];
                break;
            case Parameterization::Joint:
                g.g11 = channels[0];
                g.g12 = channels[1];
                g.g22 = channels[2];
                b.b1 = channels[3];
                b.b2 = channels[4];
                break;
        }
    }

    std::vector<Grid2D<double>> map_gradient(const ParamGradients& pg) const {
        switch (mode) {
            case Parameterization::Isotropic: {
                Grid2D<double> gsum(rows, cols, 0.0);
                for (size_t i = 0; i < gsum.size(); ++i) gsum[i] = pg.g11[i] + pg.g22[i];
                return {std::move(gsum)};
            }
            case Parameterization::Diagonal:
                return {pg.g11, pg.g22};
            case Parameterization::Full:
                return {pg.g11, pg.g12, pg.g22};
            case Parameterization::DriftOnly:
                return {pg.b1, pg.b2};
            case Parameterization::Joint:
                return {pg.g11, pg.g12, pg.g22, pg.b1, pg.b2};
        }
        return {};
    }

    std::vector<double> step_sizes(const InverseConfig& cfg, double lr_scale) const {
        const double sg = cfg.step_g * lr_scale, sb = cfg.step_b * lr_scale;
        switch (mode) {
            case Parameterization::Isotropic:
                return {sg};
            case Parameterization::Diagonal:
                return {sg, sg};
            case Parameterization::Full:
                return {sg, sg, sg};
            case Parameterization::DriftOnly:
                return {sb, sb};
            case Parameterization::Joint:
                return {sg, sg, sg, sb, sb};
        }
        return {};
    }

    void project(const ProjectionConfig& cfg) {
        switch (mode) {
            case Parameterization::Isotropic:
                for (size_t i = 0; i < channels[0].size(); ++i)
                    channels[0][i] = std::clamp(channels[0][i], cfg.eps_min, cfg.lambda_max);
                break;
            case Parameterization::Diagonal:
                for (auto& ch : channels)
                    for (size_t i = 0; i < ch.size(); ++i)
                        ch[i] = std::clamp(ch[i], cfg.eps_min, cfg.lambda_max);
                break;
            case Parameterization::Full:
                project_spd(channels[0], channels[1], channels[2], cfg);
                break;
            case Parameterization::DriftOnly:
                project_drift(channels[0], channels[1], fixed_metric.g11, fixed_metric.g12,
                              fixed_metric.g22, cfg);
                break;
            case Parameterization::Joint:
                project_spd(channels[0], channels[1], channels[2], cfg);
                project_drift(channels[3], channels[4], channels[0], channels[1], channels[2],
                              cfg);
                break;
        }
    }

    std::vector<Grid2D<double>*> pointers() {
        std::vector<Grid2D<double>*> p;
        p.reserve(channels.size());
        for (auto& ch : channels) p.push_back(&ch);
        return p;
    }

    double error_vs(const TruthFields& truth) const {
        std::vector<const Grid2D<double>*> est, ref;
        auto need_metric = [&]() -> const MetricField& {
            if (!truth.metric) throw InvalidArgument("recover: truth metric missing");
            return *truth.metric;
        };
        auto need_drift = [&]() -> const DriftField& {
            if (!truth.drift) throw InvalidArgument("recover: truth drift missing");
            return *truth.drift;
        };
        switch (mode) {
            case Parameterization::Isotropic:
                est = {&channels[0]};
                ref = {&need_metric().g11};
                break;
            case Parameterization::Diagonal:
                est = {&channels[0], &channels[1]};
                ref = {&need_metric().g11, &need_metric().g22};
                break;
            case Parameterization::Full:
                est = {&channels[0], &channels[1], &channels[2]};
                ref = {&need_metric().g11, &need_metric().g12, &need_metric().g22};
                break;
            case Parameterization::DriftOnly:
                est = {&channels[0], &channels[1]};
                ref = {&need_drift().b1, &need_drift().b2};
                break;
            case Parameterization::Joint:
                est = {&channels[0], &channels[1], &channels[2], &channels[3], &channels[4]};
                ref = {&need_metric().g11, &need_metric().g12, &need_metric().g22,
                       &need_drift().b1, &need_drift().b2};
                break;
        }
        return relative_error(est, ref);
    }
};

}  // namespace

RecoveryResult recover(const std::vector<ObservationSet>& obs, const GridSpec& spec,
                       const InverseConfig& cfg, std::optional<MetricField> init_metric,
                       std::optional<DriftField> init_drift, const TruthFields* truth) {
    cfg.validate();
    spec.validate();
    if (obs.empty()) throw InvalidArgument("recover: need at least one observation set");

    ParamView pv = ParamView::make(cfg.param, spec, init_metric, init_drift);
    pv.project(cfg.projection);

    MetricField g(spec.rows, spec.cols);
    DriftField b(spec.rows, spec.cols);
    AdamState adam;
    RecoveryResult res;
    double lr_scale = 1.0;
    double best_loss = std::numeric_limits<double>::infinity();
    double window_best = std::numeric_limits<double>::infinity();
    double initial_loss = -1.0;
    int window_fill = 0;

    for (int it = 0; it < cfg.iters; ++it) {
        pv.expand(g, b);
        const Objective obj = objective_and_grad(g, b, obs, spec, cfg);
        res.loss_history.push_back(obj.loss);
        res.unreached_observed_total += obj.unreached_observed;
        if (truth) res.error_history.push_back(pv.error_vs(*truth));

        if (initial_loss < 0.0)
            initial_loss = obj.loss;
        else if (obj.loss > 1e6 * std::max(initial_loss, 1e-12))
            throw DivergedLoss("recover: loss exploded at iteration " + std::to_string(it));

        // halve the step only when a whole window brings no new low
        window_best = std::min(window_best, obj.loss);
        if (++window_fill >= cfg.plateau_window) {
            if (window_best >= best_loss * (1.0 - 1e-6) && lr_scale > 1.0 / 256.0)
                lr_scale *= cfg.plateau_factor;
            best_loss = std::min(best_loss, window_best);
            window_best = std::numeric_limits<double>::infinity();
            window_fill = 0;
        }

        auto grads = pv.map_gradient(obj.grad);
        const auto steps = pv.step_sizes(cfg, lr_scale);
        if (cfg.optimizer == OptimizerKind::Adam)
            adam_step(adam, pv.pointers(), std::move(grads), steps, cfg);
        else
            gd_step(pv.pointers(), std::move(grads), steps, cfg);
        pv.project(cfg.projection);
        res.iterations = it + 1;
    }

    pv.expand(g, b);
    res.metric = g;
    res.drift = b;
    if (cfg.param == Parameterization::Isotropic) res.iso_g = pv.channels[0];
    if (truth) res.final_error = pv.error_vs(*truth);
    return res;
}

std::vector<ObservationSet> generate_observations(const MetricField& g, const DriftField& b,
                                                  const std::vector<SourceMask>& sources,
                                                  const GridSpec& spec, double density,
                                                  double noise_level, uint64_t seed) {
    if (!(density > 0.0) || density > 1.0)
        throw InvalidArgument("generate_observations: density must be in (0, 1]");
    if (noise_level < 0.0)
        throw InvalidArgument("generate_observations: noise_level must be >= 0");

    std::vector<ObservationSet> out;
    out.reserve(sources.size());
    for (size_t si = 0; si < sources.size(); ++si) {
        const SourceMask& src = sources[si];
        auto [t, report] = solve(g, b, src, spec);
        if (!report.converged) throw NotConverged("generate_observations: solve did not converge");

        std::vector<int> candidates;
        for (int i = 0; i < spec.count(); ++i)
            if (!src.mask[i] && is_reached(t.t[i])) candidates.push_back(i);

        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (si + 1)));
        std::shuffle(candidates.begin(), candidates.end(), rng);
        const size_t count = static_cast<size_t>(density * candidates.size());

        ObservationSet obs;
        obs.sources = src;
        obs.observed = Grid2D<uint8_t>(spec.rows, spec.cols, 0);
        obs.values = Grid2D<double>(spec.rows, spec.cols, 0.0);
        obs.noise_level = noise_level;

        double mean = 0.0, sq = 0.0;
        for (size_t k = 0; k < count; ++k) mean += t.t[candidates[k]];
        if (count > 0) mean /= static_cast<double>(count);
        for (size_t k = 0; k < count; ++k) {
            const double d = t.t[candidates[k]] - mean;
            sq += d * d;
        }
        const double sd = count > 1 ? std::sqrt(sq / static_cast<double>(count)) : 0.0;

        std::normal_distribution<double> noise(0.0, 1.0);
        for (size_t k = 0; k < count; ++k) {
            const int i = candidates[k];
            obs.observed[i] = 1;
            double v = t.t[i];
            if (noise_level > 0.0) v += noise_level * sd * noise(rng);
            obs.values[i] = std::max(v, 0.0);
        }
        out.push_back(std::move(obs));
    }
    return out;
}

std::vector<MultiSourceRow> multi_source_recover(const std::vector<int>& ks, double density,
                                                 const InverseConfig& cfg, int grid_size,
                                                 uint64_t seed) {
    for (int k : ks)
        if (k < 1) throw InvalidArgument("multi_source_recover: k must be >= 1");
    const int n = grid_size;
    const GridSpec spec{n, n, 1.0 / n};

    // two-region isotropic medium, interface down the middle
    MetricField gt(n, n, 1.0);
    for (int r = 0; r < n; ++r)
        for (int c = n / 2; c < n; ++c) {
            gt.g11(r, c) = 2.0;
            gt.g22(r, c) = 2.0;
        }
    const DriftField bt(n, n);

    // nested source layouts: k sources use the first k sampled points
    const int kmax = *std::max_element(ks.begin(), ks.end());
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(n / 8, n - 1 - n / 8);
    std::vector<std::pair<int, int>> pts;
    double min_sep = n / 4.0;
    int attempts = 0;
    while (static_cast<int>(pts.size()) < kmax) {
        const int r = pick(rng), c = pick(rng);
        bool ok = true;
        for (auto [pr, pc] : pts) {
            const double d = std::hypot(double(r - pr), double(c - pc));
            if (d < min_sep) {
                ok = false;
                break;
            }
        }
        if (ok) pts.emplace_back(r, c);
        if (++attempts > 2000) {
            min_sep *= 0.9;
            attempts = 0;
        }
    }

    TruthFields truth;
    truth.metric = gt;

    std::vector<MultiSourceRow> rows;
    for (int k : ks) {
        std::vector<SourceMask> sources;
        for (int i = 0; i < k; ++i) sources.push_back(SourceMask::point(n, n, pts[i].first, pts[i].second));
        const auto obs = generate_observations(gt, bt, sources, spec, density, 0.0, seed);
        int total = 0;
        for (const auto& o : obs) total += o.observed_count();

        InverseConfig c2 = cfg;
        c2.param = Parameterization::Isotropic;
        const RecoveryResult res = recover(obs, spec, c2, {}, {}, &truth);
        rows.push_back({k, total, res.final_error});
    }
    return rows;
}

}  // namespace randers
