#pragma once

#include <functional>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "hetvar/linalg.hpp"

namespace hetvar {

namespace vol {

struct Constant {
    Matrix sigma;
};

/// Diagonal Σ(r) with Σ_k(r) = base_k + (shifted_k − base_k)·1{τ_k ≤ r ≤ 1}.
struct PiecewiseStep {
    std::vector<double> base;
    std::vector<double> shifted;
    std::vector<double> breaks;
};

/// The bivariate trending design with ρ-correlated components:
/// Σ₁₁ = (1+γ₁r)(1+ρ²), Σ₁₂ = ρ√(1+γ₁r)√(1+γ₂r), Σ₂₂ = 1+γ₂r.
struct LinearTrend {
    double rho;
    double gamma1;
    double gamma2;
};

/// Diagonal Σ_k(r) = start_k + (end_k − start_k)·r^q.
struct PowerTrend {
    std::vector<double> start;
    std::vector<double> end;
    double q;
};

struct Generic {
    int dim;
    std::function<Matrix(double)> fn;
    std::vector<double> breaks;
};

}  // namespace vol

/// Deterministic innovation variance r ↦ Σ(r) on (0, 1].
class VolatilitySpec {
  public:
    using Form = std::variant<vol::Constant, vol::PiecewiseStep, vol::LinearTrend, vol::PowerTrend,
                              vol::Generic>;

    VolatilitySpec(Form form);  // NOLINT(google-explicit-constructor)

    template <typename F>
        requires(!std::is_same_v<std::decay_t<F>, Form> && std::is_constructible_v<Form, F>)
    VolatilitySpec(F&& form)  // NOLINT(google-explicit-constructor)
        : VolatilitySpec(Form(std::forward<F>(form))) {}

    static VolatilitySpec homoscedastic(int d) { return vol::Constant{Matrix::Identity(d, d)}; }

    int dim() const { return dim_; }
    const Form& form() const { return form_; }

    /// Interior breakpoints in (0,1), sorted and unique.
    std::vector<double> breakpoints() const;

    bool is_constant() const { return std::holds_alternative<vol::Constant>(form_); }

    /// Σ(r) for r in (0, 1].
    Matrix at(double r) const;

    /// lim_{r→0⁺} Σ(r).
    Matrix at_origin() const;

  private:
    Matrix eval(double r) const;

    Form form_;
    int dim_;
};

inline Matrix sigma_at(const VolatilitySpec& vol, double r) { return vol.at(r); }

struct QuadratureNode {
    double r;
    double weight;
};

/// Composite midpoint nodes over (0,1], `points` per segment between breakpoints.
std::vector<QuadratureNode> quadrature_nodes(const VolatilitySpec& vol, int points);

/// Composite midpoint rule over (0,1], split at the volatility breakpoints, with
/// `points` nodes per segment. `f(r, Σ(r))` must return a matrix of fixed shape.
Matrix integrate(const VolatilitySpec& vol, int points,
                 const std::function<Matrix(double, const Matrix&)>& f);

enum class KernelId { Gaussian, Epanechnikov };

double kernel_value(KernelId kernel, double z);

std::string to_string(KernelId kernel);
KernelId kernel_from_string(const std::string& name);

/// Leave-one-out weights w_{t,1..T} (t is 1-based) with w_tt = 0 and unit sum.
Vector kernel_weights(int t, int T, double b, KernelId kernel);

enum class BandwidthMode { Single, PerCell };

std::string to_string(BandwidthMode mode);
BandwidthMode bandwidth_mode_from_string(const std::string& name);

/// Bandwidths b_kl for k ≤ l, completed symmetrically.
class BandwidthSet {
  public:
    static BandwidthSet single(int d, double b);
    static BandwidthSet per_cell(const Matrix& b);

    BandwidthMode mode() const { return mode_; }
    int dim() const { return static_cast<int>(values_.rows()); }
    double at(int k, int l) const { return values_(k, l); }
    void set(int k, int l, double b);
    const Matrix& values() const { return values_; }

  private:
    BandwidthSet(BandwidthMode mode, Matrix values) : mode_(mode), values_(std::move(values)) {}

    BandwidthMode mode_;
    Matrix values_;
};

struct SmoothedVolPath {
    std::vector<Matrix> sigmas;
    double nu = 0.0;
    bool nu_escalated = false;
    std::optional<BandwidthSet> bandwidths;
};

/// Σ̌⁰_t, t = 1..T: cell (k,l) is Σ_i w_ti(b_kl) û_ki û_li. `residuals` is T × d.
std::vector<Matrix> smooth_outer_products(const Matrix& residuals, const BandwidthSet& bw,
                                          KernelId kernel);

/// Σ̌_t = {(Σ̌⁰_t)² + ν I}^{1/2}.
SmoothedVolPath regularize(const std::vector<Matrix>& raw, double nu);

/// Smallest eigenvalue of a raw smoothed matrix that triggers ν escalation when ν = 0.
inline constexpr double kEscalationEigenvalue = 1e-10;

/// Smooth then regularize. With ν = 0 and some λ_min(Σ̌⁰_t) < 1e-10, ν is raised
/// to 1e-8/T and the escalation is recorded.
SmoothedVolPath smooth_volatility(const Matrix& residuals, const BandwidthSet& bw,
                                  KernelId kernel, double nu);

/// Σ_t ‖Σ̌_t − û_t û_t′‖²_F with leave-one-out smoothing.
double cv_score(const Matrix& residuals, const BandwidthSet& bw, KernelId kernel, double nu);

/// `points` log-spaced values in [lo, hi].
std::vector<double> log_grid(double lo, double hi, int points);

struct CvTrace {
    std::vector<double> grid;
    std::vector<double> scores;
};

/// Single-bandwidth CV score over `grid`; degenerate bandwidths score +inf.
CvTrace cv_trace(const Matrix& residuals, const std::vector<double>& grid, KernelId kernel,
                 double nu);

/// Grid-search CV bandwidth selection. Single: exhaustive argmin. PerCell: cyclic
/// coordinate descent over cells from the Single optimum, at most 10 cycles. Ties
/// go to the smaller bandwidth.
BandwidthSet select_bandwidths(const Matrix& residuals, const std::vector<double>& grid,
                               BandwidthMode mode, KernelId kernel, double nu);

inline constexpr int kMaxCoordinateCycles = 10;

}  // namespace hetvar
