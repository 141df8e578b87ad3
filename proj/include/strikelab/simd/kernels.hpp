#pragma once

// Hand-written inner loops with a scalar reference and an AVX2 variant.
// The active implementation is chosen once at startup from CPUID; the
// STRIKELAB_SIMD environment variable ("scalar" or "avx2") overrides it.
//
// Every variant performs the same IEEE operations in the same order per
// element (no FMA, no reassociation), so results are bit-identical across
// variants.

#include <cstddef>
#include <span>
#include <string_view>

namespace strikelab::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);

/// Currently dispatched implementation.
Isa active_isa();

/// Pins the dispatch (tests and benchmarks). Throws if the CPU lacks `isa`.
void force_isa(Isa isa);

/// y[i] += a * x[i]
void axpy(double a, std::span<const double> x, std::span<double> y);

/// out[i] = (a[i] - b[i]) * scale
void scaled_difference(std::span<const double> a, std::span<const double> b, double scale,
                       std::span<double> out);

/// out[r] = max_c |m[r * cols + c]| for a row-major rows x cols block.
void max_abs_rows(std::span<const double> m, std::size_t rows, std::size_t cols,
                  std::span<double> out);

namespace scalar {
void axpy(double a, const double* x, double* y, std::size_t n);
void scaled_difference(const double* a, const double* b, double scale, double* out,
                       std::size_t n);
void max_abs_rows(const double* m, std::size_t rows, std::size_t cols, double* out);
}  // namespace scalar

namespace avx2 {
void axpy(double a, const double* x, double* y, std::size_t n);
void scaled_difference(const double* a, const double* b, double scale, double* out,
                       std::size_t n);
void max_abs_rows(const double* m, std::size_t rows, std::size_t cols, double* out);
}  // namespace avx2

}  // namespace strikelab::simd
