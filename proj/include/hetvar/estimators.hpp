#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hetvar/linalg.hpp"
#include "hetvar/model.hpp"
#include "hetvar/volatility.hpp"

namespace hetvar {

enum class Method { Ols, Gls, Als };

std::string to_string(Method method);

/// 50 log-spaced bandwidths in [0.01, 0.5], in fractions of the sample.
std::vector<double> default_bandwidth_grid();

struct AlsOptions {
    KernelId kernel = KernelId::Gaussian;
    std::vector<double> grid = default_bandwidth_grid();
    BandwidthMode mode = BandwidthMode::Single;
    double nu = 0.0;
    /// Subtract column means before fitting.
    bool demean = false;
};

struct Fit {
    Vector theta;
    Method method = Method::Ols;
    /// T × d, row t-1 holds û_t.
    Matrix residuals;
    std::optional<BandwidthSet> bandwidths;
    std::optional<SmoothedVolPath> vol_path;
    int d = 0;
    int p = 0;
    bool demeaned = false;

    int T() const { return static_cast<int>(residuals.rows()); }
    VarSpec spec() const { return VarSpec::from_theta(theta, d, p); }
};

/// û_t = X_t − (X̃′_{t-1} ⊗ I_d)θ for t = 1..T, returned T × d.
Matrix residuals(const Sample& sample, int p, const Vector& theta);

/// Equation-by-equation least squares. Needs T > pd + 5.
Fit ols_fit(const Sample& sample, int p, bool demean = false);

/// Weighted least squares with weights Σ_t⁻¹; `vol_path` holds Σ_1..Σ_T.
Fit gls_fit(const Sample& sample, int p, const std::vector<Matrix>& vol_path, bool demean = false);

/// OLS, CV bandwidth selection on the OLS residuals, kernel smoothing of their outer
/// products, then GLS with the smoothed path. A single pass.
Fit als_fit(const Sample& sample, int p, const AlsOptions& options = {});

/// Σ(t/T) for t = 1..T.
std::vector<Matrix> volatility_path(const VolatilitySpec& vol, int T);

/// The sample re-windowed so that p rows serve as presample; demeaned when asked.
Sample prepare_sample(const Sample& sample, int p, bool demean);

}  // namespace hetvar
