#pragma once

#include <cstdint>
#include <vector>

#include "hetvar/linalg.hpp"

namespace hetvar {

class VolatilitySpec;

/// Spectral-radius margin: a spec is stable iff ρ(Δ) < 1 − kStabilityMargin.
inline constexpr double kStabilityMargin = 1e-8;

/// A VAR(p) in d dimensions without intercept: X_t = A_1 X_{t-1} + … + A_p X_{t-p} + u_t.
class VarSpec {
  public:
    explicit VarSpec(std::vector<Matrix> coeffs);

    /// Rebuild from θ = (vec(A_1)′, …, vec(A_p)′)′.
    static VarSpec from_theta(const Vector& theta, int d, int p);

    int d() const { return d_; }
    int p() const { return p_; }
    const std::vector<Matrix>& coeffs() const { return coeffs_; }
    const Matrix& coeff(int lag) const { return coeffs_.at(static_cast<std::size_t>(lag - 1)); }

    /// θ, column-major vec of each lag matrix stacked lag-major, length p·d².
    Vector theta() const;

    /// [A_1 … A_p] as a d × pd matrix.
    Matrix stacked() const;

  private:
    int d_;
    int p_;
    std::vector<Matrix> coeffs_;
};

/// pd × pd companion matrix Δ: first block row [A_1 … A_p], identity sub-diagonal.
Matrix companion(const VarSpec& spec);

double spectral_radius(const Matrix& square);

bool is_stable(const VarSpec& spec);

/// MA(∞) coefficients ψ_0 … ψ_n with ψ_0 = I_d.
struct MaCoefficients {
    std::vector<Matrix> psi;

    std::size_t truncation() const { return psi.empty() ? 0 : psi.size() - 1; }
    int d() const { return static_cast<int>(psi.front().rows()); }

    /// ψ_i for any integer i, zero for i < 0 or i beyond the truncation.
    Matrix at(long i) const;
};

/// ψ_0 … ψ_n by the recursion ψ_i = Σ_{j=1..min(i,p)} A_j ψ_{i-j}. Throws
/// InstabilityError for unstable specs.
MaCoefficients ma_coefficients(const VarSpec& spec, int n);

/// MA coefficients truncated at the first n with ‖ψ_n‖_F < tol, or at max_terms.
MaCoefficients ma_coefficients_truncated(const VarSpec& spec, double tol = 1e-12,
                                         int max_terms = 10'000);

/// Block-diagonal diag(ψ_i, ψ_{i-1}, …, ψ_{i-p+1}), ψ_j = 0 for j < 0.
Matrix tilde_psi(const MaCoefficients& ma, long i, int p);

/// Observed path X_{-p+1}, …, X_T stored row-wise: row k holds X_{k-p+1}.
class Sample {
  public:
    Sample(Matrix data, int presample);

    int d() const { return static_cast<int>(data_.cols()); }
    int p() const { return p_; }
    int T() const { return static_cast<int>(data_.rows()) - p_; }
    const Matrix& data() const { return data_; }

    /// X_t for t in [-p+1, T].
    Eigen::VectorXd x(int t) const;

    /// X̃_{t-1} = (X′_{t-1}, …, X′_{t-p})′ for t in [1, T].
    Eigen::VectorXd regressor(int t) const;

    /// d × T matrix with column t-1 holding X_t.
    Matrix responses() const;

    /// pd × T matrix with column t-1 holding X̃_{t-1}.
    Matrix regressors() const;

    /// Same rows reinterpreted with `p` presample rows (T changes accordingly).
    Sample with_presample(int p) const;

    /// Subtract column means over all rows.
    Sample demeaned() const;

  private:
    Matrix data_;
    int p_;
};

/// Draw X_1..X_T with u_t = G(t/T) ε_t, ε_t iid N(0, I_d), G the symmetric root of
/// Σ(t/T). The presample comes from a 200-step burn-in under Σ(0⁺).
Sample simulate(const VarSpec& spec, const VolatilitySpec& vol, int T, std::uint64_t seed);

/// Same as simulate, also returning the innovations u_1..u_T as a T × d matrix.
Sample simulate(const VarSpec& spec, const VolatilitySpec& vol, int T, std::uint64_t seed,
                Matrix* innovations);

inline constexpr int kBurnIn = 200;

}  // namespace hetvar
