#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hetvar/causality.hpp"
#include "hetvar/error.hpp"

namespace hetvar {
namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10'000;

// P(a, x) by its power series; converges quickly for x < a + 1.
double lower_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kMaxIter; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a, x) by the modified Lentz continued fraction; for x >= a + 1.
double upper_fraction(double a, double x) {
    constexpr double tiny = std::numeric_limits<double>::min() / kEps;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = b + an / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) {
            break;
        }
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double chi2_sf(double x, int df) {
    if (df < 1) {
        throw InvalidArgument("chi2_sf: degrees of freedom must be positive");
    }
    if (std::isnan(x)) {
        throw InvalidArgument("chi2_sf: x is NaN");
    }
    if (x <= 0.0) {
        return 1.0;
    }
    if (std::isinf(x)) {
        return 0.0;
    }
    const double a = 0.5 * df;
    const double half = 0.5 * x;
    const double q = half < a + 1.0 ? 1.0 - lower_series(a, half) : upper_fraction(a, half);
    return std::clamp(q, 0.0, 1.0);
}

double weighted_chi2_sf(const Vector& kappas, double x, int draws, std::uint64_t seed) {
    if (kappas.size() == 0 || draws < 1) {
        throw InvalidArgument("weighted_chi2_sf: need weights and a positive draw count");
    }
    if (!(kappas.minCoeff() > 0.0)) {
        throw InvalidArgument("weighted_chi2_sf: weights must be positive");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    long exceed = 0;
    for (int n = 0; n < draws; ++n) {
        double q = 0.0;
        for (Eigen::Index i = 0; i < kappas.size(); ++i) {
            const double z = normal(rng);
            q += kappas(i) * z * z;
        }
        exceed += q > x ? 1 : 0;
    }
    return static_cast<double>(exceed) / draws;
}

}  // namespace hetvar
