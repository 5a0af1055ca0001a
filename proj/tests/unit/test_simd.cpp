#include <gtest/gtest.h>

#include <random>

#include "hetvar/simd/kernels.hpp"

using namespace hetvar::simd;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> z;
    std::vector<double> v(n);
    for (double& x : v) {
        x = z(rng);
    }
    return v;
}

}  // namespace

TEST(Simd, ScalarIsAlwaysAvailable) {
    const auto all = available_kernels();
    ASSERT_FALSE(all.empty());
    EXPECT_EQ(all.front()->isa, Isa::Scalar);
    EXPECT_EQ(&scalar_kernels(), all.front());
    bool active_listed = false;
    for (const auto* k : all) {
        active_listed |= k == &active_kernels();
    }
    EXPECT_TRUE(active_listed);
}

TEST(Simd, ScalarDotByHand) {
    const double a[] = {1, 2, 3, 4, 5};
    const double b[] = {2, 0, -1, 0.5, 1};
    EXPECT_DOUBLE_EQ(scalar_kernels().dot(a, b, 5), 2 - 3 + 2 + 5);
    EXPECT_DOUBLE_EQ(scalar_kernels().dot(a, b, 0), 0.0);
}

TEST(Simd, ScalarLaggedDotsByHand) {
    // n = 3: taps index lag −2..2
    const double taps[] = {0.1, 0.2, 0.0, 0.2, 0.1};
    const double y[] = {1, 2, 3};
    double out[3];
    scalar_kernels().lagged_dots(taps, 3, y, out);
    EXPECT_DOUBLE_EQ(out[0], 0.0 * 1 + 0.2 * 2 + 0.1 * 3);
    EXPECT_DOUBLE_EQ(out[1], 0.2 * 1 + 0.0 * 2 + 0.2 * 3);
    EXPECT_DOUBLE_EQ(out[2], 0.1 * 1 + 0.2 * 2 + 0.0 * 3);
}

TEST(Simd, VariantsMatchScalarReference) {
    std::mt19937_64 rng(21);
    const auto& ref = scalar_kernels();
    for (const auto* k : available_kernels()) {
        SCOPED_TRACE(std::string(k->name));
        for (std::size_t n : {0U, 1U, 2U, 3U, 4U, 5U, 7U, 8U, 9U, 15U, 16U, 17U, 31U, 100U, 401U}) {
            const auto a = random_vector(rng, n);
            const auto b = random_vector(rng, n);
            double scale = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                scale += std::abs(a[i] * b[i]);
            }
            EXPECT_NEAR(k->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n),
                        1e-14 * (1.0 + scale));
            if (n == 0) {
                continue;
            }
            const auto taps = random_vector(rng, 2 * n - 1);
            const auto y = random_vector(rng, n);
            std::vector<double> got(n), want(n);
            k->lagged_dots(taps.data(), n, y.data(), got.data());
            ref.lagged_dots(taps.data(), n, y.data(), want.data());
            for (std::size_t t = 0; t < n; ++t) {
                EXPECT_NEAR(got[t], want[t], 1e-13 * (1.0 + std::sqrt(static_cast<double>(n))));
            }
        }
    }
}
