#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hetvar/asymcov.hpp"
#include "hetvar/estimators.hpp"
#include "hetvar/linalg.hpp"
#include "hetvar/model.hpp"
#include "hetvar/volatility.hpp"

namespace hetvar {

/// Selection matrix for H₀: the top-right d₁×d₂ block of every A_i is zero.
struct RestrictionMatrix {
    Matrix r;
    int p = 0;
    int d = 0;
    int d1 = 0;

    int df() const { return static_cast<int>(r.rows()); }
};

/// Row order is lag-major, then column-major within each block: lag i, column c in
/// d₁+1..d, row k in 1..d₁ selects θ at (i−1)d² + (c−1)d + k (1-based).
RestrictionMatrix restriction_matrix(int p, int d, int d1);

enum class WaldMethod {
    Ols,
    OlsDelta,
    OlsMax,
    Standard,
    Als,
    AlsDelta,
    AlsMax,
    /// Infeasible: need the true volatility.
    Gls,
    GlsDelta,
    GlsMax,
};

std::string to_string(WaldMethod method);
/// Accepts the display names (W_OLS, W_ALS_delta, …) and short forms (ols, alsdelta, s).
WaldMethod wald_method_from_string(const std::string& name);
std::vector<WaldMethod> all_feasible_methods();

enum class Distribution { ChiSquare, WeightedChiSquare };

struct WaldResult {
    double statistic = 0.0;
    int df = 0;
    Distribution distribution = Distribution::ChiSquare;
    double p_value = 1.0;
    WaldMethod method = WaldMethod::Ols;
    /// Standard test only: eigenvalues of Ψ from sample plug-ins and the p-value of
    /// Σκ_i Z_i² at the statistic.
    std::optional<Vector> kappas;
    std::optional<double> corrected_p_value;
};

/// T·(Rθ)′(R cov R′)⁻¹(Rθ), where `cov` is the asymptotic covariance of √T(θ̂ − θ).
double wald_statistic(const Vector& theta, const Matrix& cov, const Matrix& r_matrix, int T);

/// Upper tail of χ²_df via the regularized incomplete gamma function.
double chi2_sf(double x, int df);

/// P(Σκ_i Z_i² > x) by Monte Carlo with `draws` seeded samples.
double weighted_chi2_sf(const Vector& kappas, double x, int draws, std::uint64_t seed);

inline constexpr int kDefaultWeightedDraws = 200'000;

/// Q_OLS (residual variant) or Q_OLS^δ (delta variant), picked by cov.variant.
WaldResult q_ols(const Fit& ols, const CovEstimates& cov, const RestrictionMatrix& r);
WaldResult q_ols_delta(const Fit& ols, const CovEstimates& cov, const RestrictionMatrix& r);
/// Q_S with Ĵ⁻¹ and a plain χ² reference.
WaldResult q_s(const Fit& ols, const CovEstimates& cov, const RestrictionMatrix& r);
/// Q_ALS (Λ̌₁) or Q_ALS^δ (Λ̌₁δ), picked by cov.variant.
WaldResult q_als(const Fit& als, const CovEstimates& cov, const RestrictionMatrix& r);
WaldResult q_als_delta(const Fit& als, const CovEstimates& cov, const RestrictionMatrix& r);
/// Q_GLS family from the precision Λ₁ built on the true path.
WaldResult q_gls(const Fit& gls, const Matrix& lambda1, CovVariant variant,
                 const RestrictionMatrix& r);
/// max{a, b} with a χ² p-value. `method` labels the result.
WaldResult q_max(const WaldResult& a, const WaldResult& b, WaldMethod method);

struct GrangerOptions {
    AlsOptions als;
    /// Needed by the GLS oracle methods.
    std::optional<VolatilitySpec> true_volatility;
    /// Report the κ-corrected p-value next to the standard test.
    bool corrected_standard = true;
    int weighted_draws = kDefaultWeightedDraws;
    std::uint64_t weighted_seed = 0x5eed;
    bool demean = false;
};

/// Fit, build covariances and test that X₂ (last d − d₁ series) does not Granger
/// cause X₁ in mean.
WaldResult granger_test(const Sample& sample, int p, int d1, WaldMethod method,
                        const GrangerOptions& options = {});

/// Several methods at once; fits and covariance estimates are shared.
std::vector<WaldResult> granger_tests(const Sample& sample, int p, int d1,
                                      const std::vector<WaldMethod>& methods,
                                      const GrangerOptions& options = {});

}  // namespace hetvar
