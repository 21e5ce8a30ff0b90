#pragma once

#include <cmath>

namespace randers {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

/// Symmetric 2x2 matrix stored as (a11, a12, a22).
struct Sym2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a22 = 0.0;

    Sym2() = default;
    Sym2(double m11, double m12, double m22) : a11(m11), a12(m12), a22(m22) {}

    static Sym2 identity() { return {1.0, 0.0, 1.0}; }

    Vec2 mul(const Vec2& v) const { return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y}; }
    double quad(const Vec2& v) const { return v.dot(mul(v)); }
    double det() const { return a11 * a22 - a12 * a12; }
    double trace() const { return a11 + a22; }

    Sym2 inverse() const {
        const double d = det();
        return {a22 / d, -a12 / d, a11 / d};
    }
};

/// Eigenvalues of a Sym2 via the trace-discriminant formula, largest first.
inline void sym2_eigenvalues(const Sym2& m, double& lo_hi, double& lo_lo) {
    const double half_tr = 0.5 * m.trace();
    const double disc = std::sqrt(0.25 * (m.a11 - m.a22) * (m.a11 - m.a22) + m.a12 * m.a12);
    lo_hi = half_tr + disc;
    lo_lo = half_tr - disc;
}

}  // namespace randers
