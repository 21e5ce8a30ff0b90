#include "randers/feasibility.hpp"

#include <algorithm>
#include <cmath>

namespace randers {

namespace {

struct EigenDecomp {
    double hi = 0.0, lo = 0.0;  // eigenvalues, hi >= lo
    double c = 1.0, s = 0.0;    // eigenvector of hi is (c, s)
};

EigenDecomp decompose(double g11, double g12, double g22) {
    EigenDecomp d;
    sym2_eigenvalues(Sym2{g11, g12, g22}, d.hi, d.lo);
    const double theta = 0.5 * std::atan2(2.0 * g12, g11 - g22);
    d.c = std::cos(theta);
    d.s = std::sin(theta);
    return d;
}

Sym2 recompose(const EigenDecomp& d, double hi, double lo) {
    return {hi * d.c * d.c + lo * d.s * d.s, (hi - lo) * d.c * d.s,
            hi * d.s * d.s + lo * d.c * d.c};
}

}  // namespace

void project_spd(Grid2D<double>& g11, Grid2D<double>& g12, Grid2D<double>& g22,
                 const ProjectionConfig& cfg) {
    cfg.validate();
    for (size_t i = 0; i < g11.size(); ++i) {
        const EigenDecomp d = decompose(g11[i], g12[i], g22[i]);
        if (d.lo >= cfg.eps_min && d.hi <= cfg.lambda_max) continue;
        const double hi = std::clamp(d.hi, cfg.eps_min, cfg.lambda_max);
        const double lo = std::clamp(d.lo, cfg.eps_min, cfg.lambda_max);
        const Sym2 g = recompose(d, hi, lo);
        g11[i] = g.a11;
        g12[i] = g.a12;
        g22[i] = g.a22;
    }
}

double drift_norm_sq(double b1, double b2, double g11, double g12, double g22) {
    const double det = g11 * g22 - g12 * g12;
    return (b1 * b1 * g22 - 2.0 * b1 * b2 * g12 + b2 * b2 * g11) / det;
}

void project_drift(Grid2D<double>& b1, Grid2D<double>& b2, const Grid2D<double>& g11,
                   const Grid2D<double>& g12, const Grid2D<double>& g22,
                   const ProjectionConfig& cfg) {
    cfg.validate();
    for (size_t i = 0; i < b1.size(); ++i) {
        double x = b1[i], y = b2[i];
        const double en = std::sqrt(x * x + y * y);
        if (en > cfg.euclid_cap) {
            const double f = cfg.euclid_cap / en;
            x *= f;
            y *= f;
        }
        const double gn = std::sqrt(drift_norm_sq(x, y, g11[i], g12[i], g22[i]));
        if (gn > cfg.tau) {
            const double f = cfg.tau / gn;
            x *= f;
            y *= f;
        }
        b1[i] = x;
        b2[i] = y;
    }
}

namespace {

// Matrix logarithm of an SPD triple through its eigendecomposition.
Sym2 log_spd(double g11, double g12, double g22) {
    const EigenDecomp d = decompose(g11, g12, g22);
    if (!(d.lo > 0.0)) throw NonSpdInput("tv_value_grad: log-Euclidean variant needs SPD input");
    return recompose(d, std::log(d.hi), std::log(d.lo));
}

// Differential of the matrix logarithm at an SPD point applied to a
// symmetric perturbation (Daleckii-Krein: scale the perturbation in the
// eigenbasis by divided differences of log).
Sym2 dlog_apply(const EigenDecomp& d, const Sym2& m) {
    // eigenbasis components of m
    const Vec2 v1{d.c, d.s}, v2{-d.s, d.c};
    const double m11 = v1.dot(m.mul(v1));
    const double m12 = v1.dot(m.mul(v2));
    const double m22 = v2.dot(m.mul(v2));
    const double phi11 = 1.0 / d.hi;
    const double phi22 = 1.0 / d.lo;
    const double phi12 = std::abs(d.hi - d.lo) > 1e-12 * d.hi
                             ? (std::log(d.hi) - std::log(d.lo)) / (d.hi - d.lo)
                             : 1.0 / d.hi;
    const Sym2 scaled{m11 * phi11, m12 * phi12, m22 * phi22};
    // back to the original frame
    const double a = scaled.a11, b = scaled.a12, c = scaled.a22;
    const double c1 = d.c, s1 = d.s;
    return {a * c1 * c1 - 2.0 * b * c1 * s1 + c * s1 * s1,
            a * c1 * s1 + b * (c1 * c1 - s1 * s1) - c * c1 * s1,
            a * s1 * s1 + 2.0 * b * c1 * s1 + c * c1 * c1};
}

// Smoothed TV of a channel stack with per-channel weights; fills `grad`.
double tv_core(const std::vector<Grid2D<double>>& ch, const std::vector<double>& w, double eps,
               std::vector<Grid2D<double>>& grad) {
    const int rows = ch[0].rows(), cols = ch[0].cols();
    const size_t nch = ch.size();
    double value = 0.0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double s = eps * eps;
            double dx[3] = {0, 0, 0}, dy[3] = {0, 0, 0};
            for (size_t k = 0; k < nch; ++k) {
                if (c + 1 < cols) dx[k] = ch[k](r, c + 1) - ch[k](r, c);
                if (r + 1 < rows) dy[k] = ch[k](r + 1, c) - ch[k](r, c);
                s += w[k] * (dx[k] * dx[k] + dy[k] * dy[k]);
            }
            const double root = std::sqrt(s);
            value += root - eps;
            for (size_t k = 0; k < nch; ++k) {
                const double fx = w[k] * dx[k] / root;
                const double fy = w[k] * dy[k] / root;
                grad[k](r, c) -= fx + fy;
                if (c + 1 < cols) grad[k](r, c + 1) += fx;
                if (r + 1 < rows) grad[k](r + 1, c) += fy;
            }
        }
    }
    return value;
}

}  // namespace

TvResult tv_value_grad(const std::vector<Grid2D<double>>& channels, TvVariant variant,
                       double eps_tv) {
    if (channels.empty() || channels.size() > 3)
        throw InvalidArgument("tv_value_grad: need 1..3 channels");
    if (!(eps_tv > 0.0)) throw InvalidArgument("tv_value_grad: eps_tv must be positive");
    const int rows = channels[0].rows(), cols = channels[0].cols();
    for (const auto& ch : channels)
        if (!ch.same_shape(rows, cols)) throw DimensionMismatch("tv_value_grad: channel shapes");

    std::vector<double> w(channels.size(), 1.0);
    if (channels.size() == 3 && variant != TvVariant::Drift) w[1] = 2.0;  // off-diagonal twice

    TvResult out;
    out.grad.assign(channels.size(), Grid2D<double>(rows, cols, 0.0));

    if (variant != TvVariant::LogEuclidean) {
        out.value = tv_core(channels, w, eps_tv, out.grad);
        return out;
    }

    if (channels.size() != 3)
        throw InvalidArgument("tv_value_grad: log-Euclidean variant needs 3 channels");

    // Map to log-metric components, run TV there, then chain the gradient
    // back through the per-node differential of the matrix logarithm.
    std::vector<Grid2D<double>> logs(3, Grid2D<double>(rows, cols, 0.0));
    for (size_t i = 0; i < channels[0].size(); ++i) {
        const Sym2 l = log_spd(channels[0][i], channels[1][i], channels[2][i]);
        logs[0][i] = l.a11;
        logs[1][i] = l.a12;
        logs[2][i] = l.a22;
    }
    std::vector<Grid2D<double>> lgrad(3, Grid2D<double>(rows, cols, 0.0));
    out.value = tv_core(logs, w, eps_tv, lgrad);

    static const Sym2 basis[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (size_t i = 0; i < channels[0].size(); ++i) {
        const EigenDecomp d = decompose(channels[0][i], channels[1][i], channels[2][i]);
        for (int k = 0; k < 3; ++k) {
            const Sym2 col = dlog_apply(d, basis[k]);  // d(log G components)/d g_k
            out.grad[k][i] =
                lgrad[0][i] * col.a11 + lgrad[1][i] * col.a12 + lgrad[2][i] * col.a22;
        }
    }
    return out;
}

TikhonovResult tikhonov_value_grad(const std::vector<Grid2D<double>>& channels, double weight) {
    TikhonovResult out;
    out.grad.reserve(channels.size());
    for (const auto& ch : channels) {
        Grid2D<double> g(ch.rows(), ch.cols(), 0.0);
        for (size_t i = 0; i < ch.size(); ++i) {
            out.value += 0.5 * weight * ch[i] * ch[i];
            g[i] = weight * ch[i];
        }
        out.grad.push_back(std::move(g));
    }
    return out;
}

}  // namespace randers
