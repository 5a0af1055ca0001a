#include "hetvar/simd/kernels.hpp"

namespace hetvar::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

void lagged_dots_scalar(const double* taps, std::size_t n, const double* y, double* out) {
    for (std::size_t t = 0; t < n; ++t) {
        out[t] = dot_scalar(taps + (n - 1 - t), y, n);
    }
}

constexpr KernelTable kScalar{Isa::Scalar, "scalar", &dot_scalar, &lagged_dots_scalar};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace hetvar::simd
