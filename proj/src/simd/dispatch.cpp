#include <cstdlib>
#include <string>

#include "hetvar/error.hpp"
#include "hetvar/simd/kernels.hpp"

namespace hetvar::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& choose() {
    const auto candidates = available_kernels();
    if (const char* env = std::getenv("HETVAR_SIMD"); env != nullptr && *env != '\0') {
        const std::string want(env);
        if (want == "auto") {
            return *candidates.back();
        }
        for (const KernelTable* k : candidates) {
            if (k->name == want) {
                return *k;
            }
        }
        throw InvalidArgument("HETVAR_SIMD=" + want + " is not available on this machine");
    }
    return *candidates.back();
}

}  // namespace

std::vector<const KernelTable*> available_kernels() {
    std::vector<const KernelTable*> out{&scalar_kernels()};
    if (const KernelTable* k = detail::avx2_kernels(); k != nullptr && cpu_has_avx2()) {
        out.push_back(k);
    }
    // NEON is architecturally mandatory on aarch64.
    if (const KernelTable* k = detail::neon_kernels(); k != nullptr) {
        out.push_back(k);
    }
    return out;
}

const KernelTable& active_kernels() {
    static const KernelTable& table = choose();
    return table;
}

}  // namespace hetvar::simd
