#include "strikelab/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define STRIKELAB_X86 1
#else
#define STRIKELAB_X86 0
#endif

namespace strikelab::simd::avx2 {

#if STRIKELAB_X86

#define STRIKELAB_AVX2 __attribute__((target("avx2")))

STRIKELAB_AVX2 void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

STRIKELAB_AVX2 void scaled_difference(const double* a, const double* b, double scale,
                                      double* out, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(scale);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, _mm256_mul_pd(d, vs));
    }
    for (; i < n; ++i) out[i] = (a[i] - b[i]) * scale;
}

STRIKELAB_AVX2 void max_abs_rows(const double* m, std::size_t rows, std::size_t cols,
                                 double* out) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = m + r * cols;
        __m256d acc = _mm256_setzero_pd();
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4) {
            const __m256d v = _mm256_andnot_pd(sign, _mm256_loadu_pd(row + c));
            acc = _mm256_max_pd(acc, v);
        }
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, acc);
        double best = lanes[0];
        for (int k = 1; k < 4; ++k)
            if (lanes[k] > best) best = lanes[k];
        for (; c < cols; ++c) {
            const double v = row[c] < 0.0 ? -row[c] : row[c];
            if (v > best) best = v;
        }
        out[r] = best;
    }
}

#else

void axpy(double a, const double* x, double* y, std::size_t n) { scalar::axpy(a, x, y, n); }
void scaled_difference(const double* a, const double* b, double scale, double* out,
                       std::size_t n) {
    scalar::scaled_difference(a, b, scale, out, n);
}
void max_abs_rows(const double* m, std::size_t rows, std::size_t cols, double* out) {
    scalar::max_abs_rows(m, rows, cols, out);
}

#endif

}  // namespace strikelab::simd::avx2
