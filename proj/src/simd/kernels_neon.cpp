#include "hetvar/simd/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

namespace hetvar::simd::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    float64x2_t acc2 = vdupq_n_f64(0.0);
    float64x2_t acc3 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
        acc2 = vfmaq_f64(acc2, vld1q_f64(a + i + 4), vld1q_f64(b + i + 4));
        acc3 = vfmaq_f64(acc3, vld1q_f64(a + i + 6), vld1q_f64(b + i + 6));
    }
    for (; i + 2 <= n; i += 2) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    }
    double acc = vaddvq_f64(vaddq_f64(vaddq_f64(acc0, acc1), vaddq_f64(acc2, acc3)));
    for (; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

void lagged_dots_neon(const double* taps, std::size_t n, const double* y, double* out) {
    for (std::size_t t = 0; t < n; ++t) {
        out[t] = dot_neon(taps + (n - 1 - t), y, n);
    }
}

constexpr KernelTable kNeon{Isa::Neon, "neon", &dot_neon, &lagged_dots_neon};

}  // namespace

const KernelTable* neon_kernels() { return &kNeon; }

}  // namespace hetvar::simd::detail

#else

namespace hetvar::simd::detail {
const KernelTable* neon_kernels() { return nullptr; }
}  // namespace hetvar::simd::detail

#endif
