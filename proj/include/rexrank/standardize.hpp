#pragma once

#include <cmath>
#include <stdexcept>

#include "rexrank/matrix.hpp"

namespace rexrank {

// Per-row batch standardization: every row is shifted and scaled to sample
// mean 0 and variance 1 across its columns (variance over N, not N-1).
// Rows with variance below 1e-12 are zeroed instead of divided: random nets
// with ReLU routinely produce dead channels and a sweep must not abort.
inline Matrix batch_standardize(const Matrix& m) {
    if (m.cols < 2)
        throw std::invalid_argument("batch_standardize: need at least 2 columns, got " +
                                    shape_string(m));
    constexpr double kDegenerateVariance = 1e-12;
    Matrix out = m;
    for (int i = 0; i < m.rows; ++i) {
        double* row = out.row_ptr(i);
        double mean = 0.0;
        for (int j = 0; j < m.cols; ++j) mean += row[j];
        mean /= m.cols;
        double var = 0.0;
        for (int j = 0; j < m.cols; ++j) {
            const double d = row[j] - mean;
            var += d * d;
        }
        var /= m.cols;
        if (var < kDegenerateVariance) {
            for (int j = 0; j < m.cols; ++j) row[j] = 0.0;
        } else {
            const double inv_std = 1.0 / std::sqrt(var);
            for (int j = 0; j < m.cols; ++j) row[j] = (row[j] - mean) * inv_std;
        }
    }
    return out;
}

}  // namespace rexrank
