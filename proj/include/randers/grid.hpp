#pragma once

#include <cstdint>
#include <vector>

#include "randers/errors.hpp"
#include "randers/mat2.hpp"

namespace randers {

/// Arrival-time sentinel for nodes the front never reached. Kept finite so
/// diagnostics can do arithmetic on whole fields; anything at or above
/// kUnreachedThreshold counts as unreached.
constexpr double kUnreached = 1e10;
constexpr double kUnreachedThreshold = 1e9;

inline bool is_reached(double t) { return t < kUnreachedThreshold; }

/// Row-major 2-D array.
template <typename T>
class Grid2D {
public:
    Grid2D() = default;
    Grid2D(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
        if (rows <= 0 || cols <= 0) throw ZeroDimension("Grid2D: dimensions must be positive");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }

    T& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    const T& operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }
    T& operator[](size_t i) { return data_[i]; }
    const T& operator[](size_t i) const { return data_[i]; }

    int index(int r, int c) const { return r * cols_ + c; }
    int row_of(int i) const { return i / cols_; }
    int col_of(int i) const { return i % cols_; }
    bool in_bounds(int r, int c) const { return r >= 0 && r < rows_ && c >= 0 && c < cols_; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool same_shape(int rows, int cols) const { return rows_ == rows && cols_ == cols; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

/// Solver grid geometry: node (r, c) sits at physical position (c*h, r*h).
struct GridSpec {
    int rows = 0;
    int cols = 0;
    double h = 1.0;

    void validate() const {
        if (rows < 3 || cols < 3)
            throw ZeroDimension("GridSpec: rows and cols must be at least 3");
        if (!(h > 0.0)) throw InvalidArgument("GridSpec: h must be positive");
    }

    int count() const { return rows * cols; }
    Vec2 position(int r, int c) const { return {c * h, r * h}; }
};

/// Per-node symmetric positive-definite metric tensor, component arrays
/// (g11, g12, g22) in (x, y) coordinates with x along columns.
struct MetricField {
    Grid2D<double> g11, g12, g22;

    MetricField() = default;
    MetricField(int rows, int cols, double diag = 1.0)
        : g11(rows, cols, diag), g12(rows, cols, 0.0), g22(rows, cols, diag) {}

    static MetricField constant(int rows, int cols, const Sym2& g) {
        MetricField f(rows, cols);
        f.g11.fill(g.a11);
        f.g12.fill(g.a12);
        f.g22.fill(g.a22);
        return f;
    }

    Sym2 at(int r, int c) const { return {g11(r, c), g12(r, c), g22(r, c)}; }
    int rows() const { return g11.rows(); }
    int cols() const { return g11.cols(); }
};

/// Per-node drift vector (b1, b2), b1 along columns (x), b2 along rows (y).
struct DriftField {
    Grid2D<double> b1, b2;

    DriftField() = default;
    DriftField(int rows, int cols, double bx = 0.0, double by = 0.0)
        : b1(rows, cols, bx), b2(rows, cols, by) {}

    Vec2 at(int r, int c) const { return {b1(r, c), b2(r, c)}; }
    int rows() const { return b1.rows(); }
    int cols() const { return b1.cols(); }
};

struct SourceMask {
    Grid2D<uint8_t> mask;

    SourceMask() = default;
    SourceMask(int rows, int cols) : mask(rows, cols, 0) {}

    static SourceMask point(int rows, int cols, int r, int c) {
        SourceMask s(rows, cols);
        s.mask(r, c) = 1;
        return s;
    }

    bool is_source(int r, int c) const { return mask(r, c) != 0; }
    int count() const {
        int n = 0;
        for (size_t i = 0; i < mask.size(); ++i) n += mask[i] ? 1 : 0;
        return n;
    }
    void validate() const {
        if (count() == 0) throw InvalidArgument("SourceMask: needs at least one source node");
    }
};

struct ArrivalField {
    Grid2D<double> t;

    ArrivalField() = default;
    ArrivalField(int rows, int cols) : t(rows, cols, kUnreached) {}

    int rows() const { return t.rows(); }
    int cols() const { return t.cols(); }
};

}  // namespace randers
