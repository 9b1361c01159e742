#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rexrank/matrix.hpp"

namespace rexrank {

// A singular value counts toward the numerical rank iff it exceeds
// rel_tolerance * sigma_max.
struct RankSettings {
    double rel_tolerance = 1e-2;

    void validate() const {
        if (!(rel_tolerance > 0.0 && rel_tolerance < 1.0))
            throw std::invalid_argument("RankSettings: rel_tolerance must lie in (0,1)");
    }
};

namespace detail {

// Householder QR of the matrix whose columns are the rows of `cols`
// (i.e. cols is A^T stored row-major, n x m with m >= n). Returns the
// n x n matrix whose row c holds column c of the R factor.
inline Matrix householder_r_factor(Matrix cols) {
    const int n = cols.rows;
    const int m = cols.cols;
    std::vector<double> v(static_cast<std::size_t>(m));
    for (int j = 0; j < n; ++j) {
        double* xj = cols.row_ptr(j);
        double norm2 = 0.0;
        for (int i = j; i < m; ++i) norm2 += xj[i] * xj[i];
        const double norm = std::sqrt(norm2);
        if (norm == 0.0) continue;
        const double x0 = xj[j];
        const double alpha = x0 >= 0.0 ? -norm : norm;
        double vtv = 0.0;
        v[j] = x0 - alpha;
        vtv += v[j] * v[j];
        for (int i = j + 1; i < m; ++i) {
            v[i] = xj[i];
            vtv += v[i] * v[i];
        }
        xj[j] = alpha;
        if (vtv == 0.0) continue;
        const double tau = 2.0 / vtv;
        for (int r = j + 1; r < n; ++r) {
            double* xr = cols.row_ptr(r);
            double w = 0.0;
            for (int i = j; i < m; ++i) w += v[i] * xr[i];
            w *= tau;
            for (int i = j; i < m; ++i) xr[i] -= w * v[i];
        }
    }
    Matrix r_cols(n, n);
    for (int c = 0; c < n; ++c) {
        const double* src = cols.row_ptr(c);
        double* dst = r_cols.row_ptr(c);
        for (int i = 0; i <= c; ++i) dst[i] = src[i];
    }
    return r_cols;
}

// One-sided Jacobi orthogonalization of the columns stored as rows of
// `cols`. On return every pair of rows is numerically orthogonal and the
// row norms are the singular values.
inline std::vector<double> one_sided_jacobi(Matrix& cols) {
    const int n = cols.rows;
    const int len = cols.cols;
    constexpr double kOrthTol = 1e-14;
    constexpr int kMaxSweeps = 64;

    std::vector<double> norm2(static_cast<std::size_t>(n), 0.0);
    for (int p = 0; p < n; ++p) {
        const double* row = cols.row_ptr(p);
        double s = 0.0;
        for (int i = 0; i < len; ++i) s += row[i] * row[i];
        norm2[p] = s;
    }

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double alpha = norm2[p];
                const double beta = norm2[q];
                if (alpha == 0.0 || beta == 0.0) continue;
                double* rp = cols.row_ptr(p);
                double* rq = cols.row_ptr(q);
                double gamma = 0.0;
                for (int i = 0; i < len; ++i) gamma += rp[i] * rq[i];
                if (std::abs(gamma) <= kOrthTol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t =
                    (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                double np = 0.0, nq = 0.0;
                for (int i = 0; i < len; ++i) {
                    const double vp = rp[i];
                    const double vq = rq[i];
                    rp[i] = c * vp - s * vq;
                    rq[i] = s * vp + c * vq;
                    np += rp[i] * rp[i];
                    nq += rq[i] * rq[i];
                }
                norm2[p] = np;
                norm2[q] = nq;
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sigma(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) sigma[p] = std::sqrt(norm2[p]);
    std::sort(sigma.begin(), sigma.end(), std::greater<double>());
    return sigma;
}

}  // namespace detail

// Singular values of m, non-increasing, length min(rows, cols).
// Householder QR reduces the (possibly transposed) matrix to its square R
// factor, then one-sided Jacobi orthogonalizes R's columns.
inline std::vector<double> singular_values(const Matrix& m) {
    if (m.empty()) throw std::invalid_argument("singular_values: empty matrix");
    if (!m.all_finite()) throw std::domain_error("singular_values: non-finite input entry");

    // Work with columns-as-rows of the tall orientation.
    Matrix cols = (m.rows >= m.cols) ? m.transposed() : m;
    Matrix r_cols = detail::householder_r_factor(std::move(cols));
    return detail::one_sided_jacobi(r_cols);
}

inline int rank_from_singular_values(const std::vector<double>& sigma,
                                     const RankSettings& settings) {
    if (sigma.empty() || sigma.front() == 0.0) return 0;
    const double threshold = settings.rel_tolerance * sigma.front();
    int rank = 0;
    for (double s : sigma) {
        if (s > threshold) ++rank;
    }
    return rank;
}

// Count of singular values strictly above rel_tolerance * sigma_max.
// The all-zero matrix has rank 0.
inline int numerical_rank(const Matrix& m, const RankSettings& settings = {}) {
    settings.validate();
    const std::vector<double> sigma = singular_values(m);
    return rank_from_singular_values(sigma, settings);
}

// Sum of singular values.
inline double nuclear_norm(const Matrix& m) {
    const std::vector<double> sigma = singular_values(m);
    double total = 0.0;
    for (double s : sigma) total += s;
    return total;
}

}  // namespace rexrank
