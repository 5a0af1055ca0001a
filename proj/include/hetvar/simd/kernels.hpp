#pragma once

// Data-parallel inner loops of the volatility smoother. Every ISA variant computes the
// same quantity as the scalar reference; only the summation order differs.

#include <cstddef>
#include <string_view>
#include <vector>

namespace hetvar::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
    Isa isa;
    std::string_view name;

    /// Σ_i a[i]·b[i].
    double (*dot)(const double* a, const double* b, std::size_t n);

    /// Symmetric Toeplitz product: out[t] = Σ_i taps[n-1+i-t]·y[i] for t < n.
    /// `taps` has 2n−1 entries and taps[n-1] is lag zero.
    void (*lagged_dots)(const double* taps, std::size_t n, const double* y, double* out);
};

const KernelTable& scalar_kernels();

/// Variants compiled into this build whose ISA the running CPU supports.
std::vector<const KernelTable*> available_kernels();

/// Kernel table in use. Chosen once from the CPU features; the HETVAR_SIMD
/// environment variable (scalar | avx2 | neon) overrides the choice.
const KernelTable& active_kernels();

namespace detail {
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();
}  // namespace detail

}  // namespace hetvar::simd
