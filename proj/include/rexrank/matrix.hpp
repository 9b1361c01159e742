#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "rexrank/rng.hpp"

namespace rexrank {

// Dense row-major matrix of 64-bit reals. Rank counting is far too
// tolerance-sensitive for 32-bit floats, so everything is double.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {
        if (r <= 0 || c <= 0) throw std::invalid_argument("Matrix: dimensions must be positive");
    }

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

    double* row_ptr(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
    const double* row_ptr(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }

    bool empty() const { return rows == 0 || cols == 0; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    static Matrix filled(int r, int c, double value) {
        Matrix m(r, c);
        for (double& x : m.data) x = value;
        return m;
    }

    static Matrix gaussian(int r, int c, Rng& rng, double stddev = 1.0) {
        Matrix m(r, c);
        for (double& x : m.data) x = stddev * rng.gaussian();
        return m;
    }

    Matrix transposed() const {
        Matrix t(cols, rows);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) t.at(j, i) = at(i, j);
        return t;
    }

    bool all_finite() const {
        for (double x : data)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

inline std::string shape_string(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

// C = A * B. Register-tiled over 4 output rows and 8 output columns; the
// inner j-loop is contiguous so the compiler can vectorize it.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: dimension mismatch " + shape_string(a) + " * " +
                                    shape_string(b));
    const int m = a.rows, k = a.cols, n = b.cols;
    Matrix c(m, n);

    constexpr int kRowTile = 4;
    constexpr int kColTile = 64;
    for (int j0 = 0; j0 < n; j0 += kColTile) {
        const int jn = std::min(j0 + kColTile, n);
        int i0 = 0;
        for (; i0 + kRowTile <= m; i0 += kRowTile) {
            const double* a0 = a.row_ptr(i0 + 0);
            const double* a1 = a.row_ptr(i0 + 1);
            const double* a2 = a.row_ptr(i0 + 2);
            const double* a3 = a.row_ptr(i0 + 3);
            double* c0 = c.row_ptr(i0 + 0);
            double* c1 = c.row_ptr(i0 + 1);
            double* c2 = c.row_ptr(i0 + 2);
            double* c3 = c.row_ptr(i0 + 3);
            for (int kk = 0; kk < k; ++kk) {
                const double* brow = b.row_ptr(kk);
                const double v0 = a0[kk], v1 = a1[kk], v2 = a2[kk], v3 = a3[kk];
                for (int j = j0; j < jn; ++j) {
                    const double bkj = brow[j];
                    c0[j] += v0 * bkj;
                    c1[j] += v1 * bkj;
                    c2[j] += v2 * bkj;
                    c3[j] += v3 * bkj;
                }
            }
        }
        for (; i0 < m; ++i0) {
            const double* arow = a.row_ptr(i0);
            double* crow = c.row_ptr(i0);
            for (int kk = 0; kk < k; ++kk) {
                const double* brow = b.row_ptr(kk);
                const double v = arow[kk];
                for (int j = j0; j < jn; ++j) crow[j] += v * brow[j];
            }
        }
    }
    return c;
}

}  // namespace rexrank
