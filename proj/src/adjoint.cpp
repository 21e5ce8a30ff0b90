#include "randers/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace randers {

StencilRecordSet identify_stencils(const ArrivalField& t, const MetricField& g,
                                   const DriftField& b, const SourceMask& src,
                                   const GridSpec& spec, double tol) {
    StencilRecordSet set;
    set.record_index = Grid2D<int>(spec.rows, spec.cols, -1);
    set.records.reserve(t.t.size());

    for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) {
            if (src.is_source(r, c) || !is_reached(t.t(r, c))) continue;
            const NodeCandidate cand = best_candidate(r, c, t.t, g, b, spec.h);
            const double stored = t.t(r, c);
            if (!cand.found || std::abs(cand.t0 - stored) > 100.0 * tol)
                throw InconsistentFixedPoint("identify_stencils: node (" + std::to_string(r) +
                                             "," + std::to_string(c) +
                                             ") does not reproduce its arrival value");

            StencilRecord rec;
            rec.node = t.t.index(r, c);
            rec.type = cand.type;
            rec.stencil = cand.stencil;
            const Sym2 gn = g.at(r, c);
            const Vec2 bn = b.at(r, c);

            if (cand.type == UpdateType::TwoPoint) {
                const auto o1 = StencilTable::offset(cand.donor1);
                const auto o2 = StencilTable::offset(cand.donor2);
                rec.donor[0] = t.t.index(r + o1[0], c + o1[1]);
                rec.donor[1] = t.t.index(r + o2[0], c + o2[1]);
                rec.m1 = StencilTable::displacement(cand.donor1, spec.h);
                rec.m2 = StencilTable::displacement(cand.donor2, spec.h);
                const Vec2 gm1 = gn.mul(rec.m1);
                const double e11 = rec.m1.dot(gm1);
                const double e12 = rec.m2.dot(gm1);
                const double e22 = rec.m2.dot(gn.mul(rec.m2));
                const double det = e11 * e22 - e12 * e12;
                rec.q11 = e22 / det;
                rec.q12 = -e12 / det;
                rec.q22 = e11 / det;
                const double s1 = t.t[rec.donor[0]] + rec.m1.dot(bn);
                const double s2 = t.t[rec.donor[1]] + rec.m2.dot(bn);
                rec.u1 = s1 - stored;
                rec.u2 = s2 - stored;
                ++set.two_point_count;
            } else {
                const auto o1 = StencilTable::offset(cand.donor1);
                rec.donor[0] = t.t.index(r + o1[0], c + o1[1]);
                rec.m1 = StencilTable::displacement(cand.donor1, spec.h);
                rec.r_edge = t.t[rec.donor[0]] + rec.m1.dot(bn) - stored;
                rec.e_edge = gn.quad(rec.m1);
                ++set.one_point_count;
            }
            set.record_index(r, c) = static_cast<int>(set.records.size());
            set.records.push_back(rec);
        }
    }
    return set;
}

JacobianEntries jacobian_entries(const StencilRecord& rec) {
    JacobianEntries out;
    if (rec.type == UpdateType::TwoPoint) {
        const double qu1 = rec.q11 * rec.u1 + rec.q12 * rec.u2;
        const double qu2 = rec.q12 * rec.u1 + rec.q22 * rec.u2;
        out.diag = -2.0 * (qu1 + qu2);
        out.donor[0] = 2.0 * qu1;
        out.donor[1] = 2.0 * qu2;
    } else {
        out.diag = -2.0 * rec.r_edge;
        out.donor[0] = 2.0 * rec.r_edge;
    }

    const double scale = std::max(std::abs(out.donor[0]) + std::abs(out.donor[1]), 1.0);
    const double floor = 1e-12 * scale;
    if (std::abs(out.diag) < floor) {
        out.diag = std::copysign(floor, out.diag == 0.0 ? 1.0 : out.diag);
        out.clamped = true;
    }
    return out;
}

AdjointField solve_adjoint(const StencilRecordSet& records, const ArrivalField& t,
                           const Grid2D<double>& loss_grad) {
    AdjointField out;
    out.lambda = Grid2D<double>(t.rows(), t.cols(), 0.0);

    std::vector<int> order(records.records.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ta = t.t[records.records[a].node];
        const double tb = t.t[records.records[b].node];
        if (ta != tb) return ta > tb;
        return records.records[a].node < records.records[b].node;
    });

    // acc_i collects g_i - sum_j J_ji * lambda_j as dependents are finalized.
    std::vector<double> acc(loss_grad.data(), loss_grad.data() + loss_grad.size());
    for (int idx : order) {
        const StencilRecord& rec = records.records[idx];
        const JacobianEntries jac = jacobian_entries(rec);
        if (jac.clamped) ++out.clamped_diagonals;
        const double lam = acc[rec.node] / jac.diag;
        out.lambda[rec.node] = lam;
        acc[rec.donor[0]] -= jac.donor[0] * lam;
        if (rec.donor[1] >= 0) acc[rec.donor[1]] -= jac.donor[1] * lam;
    }
    return out;
}

ParamGradients param_gradients(const StencilRecordSet& records, const AdjointField& adj) {
    ParamGradients out(adj.lambda.rows(), adj.lambda.cols());
    for (const StencilRecord& rec : records.records) {
        const double lam = adj.lambda[rec.node];
        if (lam == 0.0) continue;
        if (rec.type == UpdateType::TwoPoint) {
            const double qu1 = rec.q11 * rec.u1 + rec.q12 * rec.u2;
            const double qu2 = rec.q12 * rec.u1 + rec.q22 * rec.u2;
            const Vec2 w = rec.m1 * qu1 + rec.m2 * qu2;  // M Q u
            // dR/db = 2w, dR/dG = -w w'
            out.b1[rec.node] = -lam * 2.0 * w.x;
            out.b2[rec.node] = -lam * 2.0 * w.y;
            out.g11[rec.node] = lam * w.x * w.x;
            out.g12[rec.node] = lam * 2.0 * w.x * w.y;
            out.g22[rec.node] = lam * w.y * w.y;
        } else {
            // dR/db = 2r*mi, dR/dG = -mi mi'
            out.b1[rec.node] = -lam * 2.0 * rec.r_edge * rec.m1.x;
            out.b2[rec.node] = -lam * 2.0 * rec.r_edge * rec.m1.y;
            out.g11[rec.node] = lam * rec.m1.x * rec.m1.x;
            out.g12[rec.node] = lam * 2.0 * rec.m1.x * rec.m1.y;
            out.g22[rec.node] = lam * rec.m1.y * rec.m1.y;
        }
    }
    return out;
}

LossGrad loss_grad_mse(const ArrivalField& t, const ObservationSet& obs) {
    LossGrad out;
    out.grad = Grid2D<double>(t.rows(), t.cols(), 0.0);
    for (size_t i = 0; i < t.t.size(); ++i) {
        if (!obs.observed[i]) continue;
        if (!is_reached(t.t[i])) {
            ++out.unreached_observed;
            continue;
        }
        const double diff = t.t[i] - obs.values[i];
        out.grad[i] = diff;
        out.loss += 0.5 * diff * diff;
    }
    return out;
}

}  // namespace randers
