#pragma once

#include <array>
#include <cmath>

#include "randers/mat2.hpp"

namespace randers {

/// Moore neighborhood as (row, col) offsets, ring-ordered starting at the
/// upper-left neighbor. Triangular stencil k pairs neighbors k and (k+1)%8,
/// so consecutive offsets are 45 degrees apart and always independent.
struct StencilTable {
    static constexpr int kNeighbors = 8;
    // ring: upper-left, west, lower-left, south, lower-right, east,
    // upper-right, north
    static constexpr std::array<int, 8> dr = {-1, 0, 1, 1, 1, 0, -1, -1};
    static constexpr std::array<int, 8> dc = {-1, -1, -1, 0, 1, 1, 1, 0};

    static std::array<int, 2> offset(int k) { return {dr[k], dc[k]}; }

    /// Physical displacement to neighbor k for grid spacing h; x runs along
    /// columns, y along rows.
    static Vec2 displacement(int k, double h) { return {dc[k] * h, dr[k] * h}; }
};

struct TwoPointResult {
    double t0 = 0.0;
    double lam1 = 0.0;
    double lam2 = 0.0;
    bool valid = false;
};

/// Two-donor update: the larger root of the quadratic
///   (s - T0*1)' Q (s - T0*1) = 1,  Q = (M' G M)^-1,  s_i = T_i + m_i.b,
/// valid when the root is causal (T0 > max(T1, T2)) and the barycentric
/// weights lam = Q (T0*1 - s) are nonnegative. A stencil matrix that is
/// numerically singular relative to its own scale yields valid = false.
TwoPointResult two_point_update(double t1, double t2, const Vec2& m1, const Vec2& m2,
                                const Sym2& g, const Vec2& b);

/// Single-donor update along one edge: T0 = Ti + mi.b + sqrt(mi' G mi).
inline double one_point_update(double ti, const Vec2& mi, const Sym2& g, const Vec2& b) {
    return ti + mi.dot(b) + std::sqrt(g.quad(mi));
}

}  // namespace randers
