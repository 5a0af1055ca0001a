#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hetvar/model.hpp"
#include "hetvar/volatility.hpp"

namespace hetvar::fixtures {

/// A stable VarSpec with entries drawn uniformly and rescaled so that ρ(Δ) ≤ radius.
inline VarSpec random_stable_spec(std::mt19937_64& rng, int d, int p, double radius = 0.8) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Matrix> coeffs(p, Matrix(d, d));
    for (auto& a : coeffs) {
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                a(i, j) = u(rng);
            }
        }
    }
    const double rho = spectral_radius(companion(VarSpec(coeffs)));
    const double target = radius * std::uniform_real_distribution<double>(0.2, 1.0)(rng);
    const double scale = target / std::max(rho, 1e-3);
    for (int lag = 0; lag < p; ++lag) {
        coeffs[lag] *= std::pow(scale, lag + 1);
    }
    return VarSpec(coeffs);
}

inline Matrix random_spd(std::mt19937_64& rng, int d, double floor = 0.2) {
    std::normal_distribution<double> z;
    Matrix b(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            b(i, j) = z(rng);
        }
    }
    return b * b.transpose() / d + floor * Matrix::Identity(d, d);
}

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> z;
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = z(rng);
        }
    }
    return m;
}

/// Battery of heteroskedastic and constant volatility shapes in dimension d.
inline std::vector<VolatilitySpec> volatility_battery(std::mt19937_64& rng, int d, int count) {
    std::uniform_real_distribution<double> u(0.25, 4.0);
    std::uniform_real_distribution<double> tau(0.05, 0.95);
    std::vector<VolatilitySpec> out;
    for (int i = 0; i < count; ++i) {
        std::vector<double> a(d), b(d), t(d);
        for (int k = 0; k < d; ++k) {
            a[k] = u(rng);
            b[k] = u(rng);
            t[k] = tau(rng);
        }
        switch (i % 5) {
            case 0:
                out.emplace_back(vol::Constant{random_spd(rng, d)});
                break;
            case 1:
                out.emplace_back(vol::PiecewiseStep{a, b, t});
                break;
            case 2:
                out.emplace_back(vol::PowerTrend{a, b, 1.0 + 2.0 * tau(rng)});
                break;
            case 3:
                if (d == 2) {
                    out.emplace_back(vol::LinearTrend{tau(rng) - 0.5, 20.0 * tau(rng), 5.0 * tau(rng)});
                    break;
                }
                [[fallthrough]];
            default: {
                const Matrix s0 = random_spd(rng, d);
                const Matrix s1 = random_spd(rng, d);
                out.emplace_back(vol::Generic{d,
                                              [s0, s1](double r) {
                                                  const double w = std::sin(3.0 * r) * std::sin(3.0 * r);
                                                  return Matrix((1.0 - w) * s0 + w * s1);
                                              },
                                              {}});
                break;
            }
        }
    }
    return out;
}

}  // namespace hetvar::fixtures
