#include "strikelab/simd/kernels.hpp"

#include <cmath>

namespace strikelab::simd::scalar {

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scaled_difference(const double* a, const double* b, double scale, double* out,
                       std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = (a[i] - b[i]) * scale;
}

void max_abs_rows(const double* m, std::size_t rows, std::size_t cols, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = m + r * cols;
        double best = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = std::fabs(row[c]);
            if (v > best) best = v;
        }
        out[r] = best;
    }
}

}  // namespace strikelab::simd::scalar
