#include "strikelab/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace strikelab::simd {
namespace {

Isa detect() {
    if (const char* env = std::getenv("STRIKELAB_SIMD")) {
        const std::string_view want(env);
        if (want == "scalar") return Isa::scalar;
        if (want == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
    }
    return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

void check_sizes(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
    if (isa == Isa::scalar) return true;
#if defined(__x86_64__) || defined(_M_X64)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
    if (!isa_supported(isa))
        throw std::runtime_error("SIMD variant not supported on this CPU: " +
                                 std::string(isa_name(isa)));
    current().store(isa, std::memory_order_relaxed);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    check_sizes(x.size(), y.size(), "axpy");
    if (active_isa() == Isa::avx2)
        avx2::axpy(a, x.data(), y.data(), x.size());
    else
        scalar::axpy(a, x.data(), y.data(), x.size());
}

void scaled_difference(std::span<const double> a, std::span<const double> b, double scale,
                       std::span<double> out) {
    check_sizes(a.size(), b.size(), "scaled_difference");
    check_sizes(a.size(), out.size(), "scaled_difference");
    if (active_isa() == Isa::avx2)
        avx2::scaled_difference(a.data(), b.data(), scale, out.data(), a.size());
    else
        scalar::scaled_difference(a.data(), b.data(), scale, out.data(), a.size());
}

void max_abs_rows(std::span<const double> m, std::size_t rows, std::size_t cols,
                  std::span<double> out) {
    check_sizes(m.size(), rows * cols, "max_abs_rows");
    check_sizes(out.size(), rows, "max_abs_rows");
    if (active_isa() == Isa::avx2)
        avx2::max_abs_rows(m.data(), rows, cols, out.data());
    else
        scalar::max_abs_rows(m.data(), rows, cols, out.data());
}

}  // namespace strikelab::simd
