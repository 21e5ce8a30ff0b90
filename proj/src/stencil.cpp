#include "randers/stencil.hpp"

#include <algorithm>

namespace randers {

TwoPointResult two_point_update(double t1, double t2, const Vec2& m1, const Vec2& m2,
                                const Sym2& g, const Vec2& b) {
    TwoPointResult res;

    // Stencil metric E = M'GM and its inverse Q.
    const Vec2 gm1 = g.mul(m1);
    const double e11 = m1.dot(gm1);
    const double e12 = m2.dot(gm1);
    const double e22 = m2.dot(g.mul(m2));
    const double det = e11 * e22 - e12 * e12;
    if (!(det > 1e-14 * std::max(e11 * e22, e12 * e12)))
        return res;  // degenerate metric/stencil pairing

    const double q11 = e22 / det;
    const double q12 = -e12 / det;
    const double q22 = e11 / det;

    const double s1 = t1 + m1.dot(b);
    const double s2 = t2 + m2.dot(b);

    // Quadratic a*T0^2 - 2*bq*T0 + c = 0 from (s - T0*1)' Q (s - T0*1) = 1.
    const double a = q11 + 2.0 * q12 + q22;
    const double bq = (q11 + q12) * s1 + (q12 + q22) * s2;
    const double c = q11 * s1 * s1 + 2.0 * q12 * s1 * s2 + q22 * s2 * s2 - 1.0;

    const double disc = bq * bq - a * c;
    if (disc < 0.0 || a <= 0.0) return res;

    const double t0 = (bq + std::sqrt(disc)) / a;
    const double d1 = t0 - s1;
    const double d2 = t0 - s2;
    res.t0 = t0;
    res.lam1 = q11 * d1 + q12 * d2;
    res.lam2 = q12 * d1 + q22 * d2;
    res.valid = t0 > std::max(t1, t2) && res.lam1 >= 0.0 && res.lam2 >= 0.0;
    return res;
}

}  // namespace randers
