// Compiled with -mavx2 -mfma. Nothing here may be inlined into code built for the
// baseline ISA, so this file includes no project headers besides the kernel table.
#include "hetvar/simd/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace hetvar::simd::detail {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

void lagged_dots_avx2(const double* taps, std::size_t n, const double* y, double* out) {
    for (std::size_t t = 0; t < n; ++t) {
        out[t] = dot_avx2(taps + (n - 1 - t), y, n);
    }
}

constexpr KernelTable kAvx2{Isa::Avx2, "avx2", &dot_avx2, &lagged_dots_avx2};

}  // namespace

const KernelTable* avx2_kernels() { return &kAvx2; }

}  // namespace hetvar::simd::detail

#else

namespace hetvar::simd::detail {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace hetvar::simd::detail

#endif
