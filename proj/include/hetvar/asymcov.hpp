#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hetvar/estimators.hpp"
#include "hetvar/linalg.hpp"
#include "hetvar/model.hpp"
#include "hetvar/volatility.hpp"

namespace hetvar {

/// Which of the three limit matrices is meant: Λ₁ (GLS precision, ⊗Σ⁻¹), Λ₂ (OLS
/// sandwich meat, ⊗Σ) or Λ₃ (OLS bread, ⊗I).
enum class CovKind { Gls = 1, OlsMeat = 2, OlsBread = 3 };

/// How a Λ estimate was built: direct sample moments, or the Kronecker-inverse map
/// applied to Ω estimates and an estimated companion matrix.
enum class CovVariant { Residual, Delta };

std::string to_string(CovVariant variant);

/// Largest p·d² accepted by delta_lambda (the operator is (pd²)² × (pd²)²).
inline constexpr int kMaxDeltaDim = 50;

// Sample moments. `residuals` is T × d and aligned with sample.with_presample(p).

Matrix omega3_hat(const Matrix& residuals);
/// T⁻¹ Σ_{t=2..T} û_{t-1}û′_{t-1} ⊗ û_tû′_t.
Matrix omega2_hat(const Matrix& residuals);
Matrix lambda2_hat(const Sample& sample, int p, const Matrix& residuals);
Matrix lambda3_hat(const Sample& sample, int p);
/// T⁻¹ Σ X̃X̃′ ⊗ Σ_t⁻¹ for a path of SPD Σ_t (smoothed or true).
Matrix lambda1_check(const Sample& sample, int p, const std::vector<Matrix>& sigmas);
/// T⁻¹ Σ Σ_t ⊗ Σ_t⁻¹.
Matrix omega1_check(const std::vector<Matrix>& sigmas);
/// {T⁻¹ Σ X̃X̃′} ⊗ Ω̂₃⁻¹.
Matrix j_hat(const Sample& sample, int p, const Matrix& residuals);

/// Λ_k from vec(Λ_k) = {I − (Δ⊗I_d)^{⊗2}}⁻¹ vec(blockdiag(Ω̃_k, 0)), where Ω̃ is
/// Ω₁ (d²×d²), Ω₂ (d²×d²) or Ω₃⊗I_d for Ω₃ given d×d.
Matrix delta_lambda(const Matrix& omega, const Matrix& delta, CovKind kind);

/// Σ_i ψ̃_i (1_{p×p} ⊗ S) ψ̃′_i for a d×d matrix S, evaluated by a truncated MA
/// series; linear in S so the basis images are computed once.
class MaVarianceMap {
  public:
    explicit MaVarianceMap(const VarSpec& spec);
    Matrix operator()(const Matrix& s) const;
    std::size_t terms() const { return terms_; }

  private:
    int d_;
    int p_;
    std::size_t terms_;
    std::vector<Matrix> basis_;  // images of the symmetric unit matrices, k ≤ l
};

/// Λ_k by midpoint quadrature of the MA-series integrand, `quad_points` per smooth
/// segment of Σ(r).
Matrix theoretical_lambda(const VarSpec& spec, const VolatilitySpec& vol, CovKind kind,
                          int quad_points = 2000);

/// Ω₁ = ∫Σ⊗Σ⁻¹, Ω₂ = ∫Σ⊗Σ, Ω₃ = ∫Σ by the same quadrature rule.
Matrix theoretical_omega(const VolatilitySpec& vol, CovKind kind, int quad_points = 2000);

/// All population quantities in one quadrature pass; j is ∫Σψ̃(1⊗Σ)ψ̃′dr ⊗ Ω₃⁻¹.
struct TheoreticalCov {
    Matrix lambda1;
    Matrix lambda2;
    Matrix lambda3;
    Matrix j;
    Matrix omega1;
    Matrix omega2;
    Matrix omega3;
};
TheoreticalCov theoretical_covariances(const VarSpec& spec, const VolatilitySpec& vol,
                                       int quad_points = 2000);

/// Var_OLS/Var_GLS for the (2,1) coefficient of a diagonal bivariate VAR(1) with step
/// volatility: {∫Σ₁Σ₂ / (∫Σ₁)²}·∫Σ₁/Σ₂, integrals exact on each constant piece.
double example1_variance_ratio(double a1, const vol::PiecewiseStep& vol);

/// (∫Σ₁)⁻¹(∫Σ₂)⁻¹∫Σ₁Σ₂ for a diagonal bivariate volatility.
double example2_kappa(const VolatilitySpec& vol, int quad_points = 2000);

struct PsiResult {
    Matrix psi;
    /// Eigenvalues of Ψ, descending.
    Vector kappas;
};

/// Ψ = (RJ⁻¹R′)^{-1/2}(RΛ₃⁻¹Λ₂Λ₃⁻¹R′)(RJ⁻¹R′)^{-1/2}.
PsiResult psi_matrix(const Matrix& lambda2, const Matrix& lambda3, const Matrix& j,
                     const Matrix& r_matrix);

/// Λ₃⁻¹Λ₂Λ₃⁻¹.
Matrix sandwich(const Matrix& lambda2, const Matrix& lambda3);

/// Covariance building blocks for the Wald statistics.
struct CovEstimates {
    CovVariant variant = CovVariant::Residual;
    std::optional<Matrix> lambda1;
    std::optional<Matrix> omega1;
    Matrix lambda2;
    Matrix lambda3;
    Matrix omega2;
    Matrix omega3;
    Matrix j_hat;
};

/// Λ̂₂, Λ̂₃ (or their δ versions from Ω̂₂, Ω̂₃ and the OLS companion), Ω̂₂, Ω̂₃, Ĵ.
CovEstimates ols_cov_estimates(const Sample& sample, const Fit& ols, CovVariant variant);

/// Λ̌₁ (or Λ̌₁δ from Ω̌₁ and the companion of `theta`) for a weight path Σ_t.
Matrix weighted_lambda1(const Sample& sample, int p, const std::vector<Matrix>& sigmas,
                        const Vector& theta, CovVariant variant);

/// ols_cov_estimates plus Λ̌₁ from the smoothed path of an ALS fit.
CovEstimates als_cov_estimates(const Sample& sample, const Fit& ols, const Fit& als,
                               CovVariant variant);

}  // namespace hetvar
