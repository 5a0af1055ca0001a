#include "hetvar/model.hpp"

#include <cmath>
#include <random>

#include "hetvar/error.hpp"
#include "hetvar/volatility.hpp"

namespace hetvar {

VarSpec::VarSpec(std::vector<Matrix> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) {
        throw InvalidArgument("VarSpec: at least one lag matrix is required");
    }
    d_ = static_cast<int>(coeffs_.front().rows());
    p_ = static_cast<int>(coeffs_.size());
    if (d_ < 1) {
        throw InvalidArgument("VarSpec: dimension must be positive");
    }
    for (const auto& a : coeffs_) {
        if (a.rows() != d_ || a.cols() != d_) {
            throw InvalidArgument("VarSpec: coefficient matrices must all be d x d");
        }
        if (!a.allFinite()) {
            throw InvalidArgument("VarSpec: coefficients must be finite");
        }
    }
}

VarSpec VarSpec::from_theta(const Vector& theta, int d, int p) {
    if (d < 1 || p < 1 || theta.size() != static_cast<Eigen::Index>(p) * d * d) {
        throw InvalidArgument("VarSpec::from_theta: theta must have length p*d*d");
    }
    std::vector<Matrix> coeffs;
    coeffs.reserve(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) {
        coeffs.push_back(linalg::unvec(theta.segment(i * d * d, d * d), d, d));
    }
    return VarSpec(std::move(coeffs));
}

Vector VarSpec::theta() const { return linalg::vec(stacked()); }

Matrix VarSpec::stacked() const {
    Matrix out(d_, d_ * p_);
    for (int i = 0; i < p_; ++i) {
        out.middleCols(i * d_, d_) = coeffs_[static_cast<std::size_t>(i)];
    }
    return out;
}

Matrix companion(const VarSpec& spec) {
    const int d = spec.d();
    const int p = spec.p();
    Matrix delta = Matrix::Zero(p * d, p * d);
    delta.topRows(d) = spec.stacked();
    if (p > 1) {
        delta.block(d, 0, (p - 1) * d, (p - 1) * d).setIdentity();
    }
    return delta;
}

double spectral_radius(const Matrix& square) {
    if (square.size() == 0) {
        return 0.0;
    }
    Eigen::EigenSolver<Matrix> eig(square, false);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_stable(const VarSpec& spec) {
    return spectral_radius(companion(spec)) < 1.0 - kStabilityMargin;
}

Matrix MaCoefficients::at(long i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= psi.size()) {
        return Matrix::Zero(d(), d());
    }
    return psi[static_cast<std::size_t>(i)];
}

namespace {

void require_stable(const VarSpec& spec) {
    if (!is_stable(spec)) {
        throw InstabilityError("VAR specification is not stable");
    }
}

Matrix next_psi(const VarSpec& spec, const std::vector<Matrix>& psi) {
    const std::size_t i = psi.size();
    Matrix out = Matrix::Zero(spec.d(), spec.d());
    const std::size_t lags = std::min<std::size_t>(i, static_cast<std::size_t>(spec.p()));
    for (std::size_t j = 1; j <= lags; ++j) {
        out.noalias() += spec.coeff(static_cast<int>(j)) * psi[i - j];
    }
    return out;
}

}  // namespace

MaCoefficients ma_coefficients(const VarSpec& spec, int n) {
    if (n < 0) {
        throw InvalidArgument("ma_coefficients: n must be nonnegative");
    }
    require_stable(spec);
    MaCoefficients ma;
    ma.psi.reserve(static_cast<std::size_t>(n) + 1);
    ma.psi.push_back(Matrix::Identity(spec.d(), spec.d()));
    for (int i = 1; i <= n; ++i) {
        ma.psi.push_back(next_psi(spec, ma.psi));
    }
    return ma;
}

MaCoefficients ma_coefficients_truncated(const VarSpec& spec, double tol, int max_terms) {
    require_stable(spec);
    MaCoefficients ma;
    ma.psi.push_back(Matrix::Identity(spec.d(), spec.d()));
    // A VAR(p) can have ψ_i = 0 for isolated i while later terms are not; require p
    // consecutive negligible terms before stopping.
    int small_run = 0;
    for (int i = 1; i <= max_terms; ++i) {
        ma.psi.push_back(next_psi(spec, ma.psi));
        small_run = ma.psi.back().norm() < tol ? small_run + 1 : 0;
        if (small_run >= spec.p()) {
            break;
        }
    }
    return ma;
}

Matrix tilde_psi(const MaCoefficients& ma, long i, int p) {
    const int d = ma.d();
    Matrix out = Matrix::Zero(p * d, p * d);
    for (int j = 0; j < p; ++j) {
        out.block(j * d, j * d, d, d) = ma.at(i - j);
    }
    return out;
}

Sample::Sample(Matrix data, int presample) : data_(std::move(data)), p_(presample) {
    if (p_ < 0) {
        throw InvalidArgument("Sample: presample length must be nonnegative");
    }
    if (data_.rows() <= p_) {
        throw DataError("Sample: need at least one observation after the presample");
    }
    if (data_.cols() < 1) {
        throw DataError("Sample: need at least one series");
    }
    if (!data_.allFinite()) {
        throw DataError("Sample: data must be finite");
    }
}

Eigen::VectorXd Sample::x(int t) const {
    if (t < 1 - p_ || t > T()) {
        throw InvalidArgument("Sample::x: index out of range");
    }
    return data_.row(t + p_ - 1).transpose();
}

Eigen::VectorXd Sample::regressor(int t) const {
    Eigen::VectorXd out(p_ * d());
    for (int j = 1; j <= p_; ++j) {
        out.segment((j - 1) * d(), d()) = x(t - j);
    }
    return out;
}

Matrix Sample::responses() const { return data_.bottomRows(T()).transpose(); }

Matrix Sample::regressors() const {
    const int n = T();
    const int dim = d();
    Matrix out(p_ * dim, n);
    for (int j = 1; j <= p_; ++j) {
        // X_{t-j} for t = 1..T sits in rows p-j .. p-j+T-1.
        out.middleRows((j - 1) * dim, dim) = data_.middleRows(p_ - j, n).transpose();
    }
    return out;
}

Sample Sample::with_presample(int p) const { return Sample(data_, p); }

Sample Sample::demeaned() const {
    Matrix centered = data_.rowwise() - data_.colwise().mean();
    return Sample(std::move(centered), p_);
}

Sample simulate(const VarSpec& spec, const VolatilitySpec& vol, int T, std::uint64_t seed) {
    return simulate(spec, vol, T, seed, nullptr);
}

Sample simulate(const VarSpec& spec, const VolatilitySpec& vol, int T, std::uint64_t seed,
                Matrix* innovations) {
    if (T < 1) {
        throw InvalidArgument("simulate: T must be positive");
    }
    if (vol.dim() != spec.d()) {
        throw InvalidArgument("simulate: volatility dimension does not match the VAR");
    }
    require_stable(spec);
    const int d = spec.d();
    const int p = spec.p();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&] {
        Vector eps(d);
        for (int k = 0; k < d; ++k) {
            eps(k) = normal(rng);
        }
        return eps;
    };

    auto root_of = [&](const Matrix& sigma) {
        if (!linalg::is_spd(sigma)) {
            throw NotPositiveDefiniteError("simulate: volatility is not positive definite");
        }
        return linalg::sym_sqrt(sigma);
    };

    // history holds X_{s-1}, …, X_{s-p} with the newest first.
    std::vector<Vector> history(static_cast<std::size_t>(p), Vector::Zero(d));
    auto step = [&](const Vector& u) {
        Vector x = u;
        for (int j = 0; j < p; ++j) {
            x.noalias() += spec.coeffs()[static_cast<std::size_t>(j)] * history[static_cast<std::size_t>(j)];
        }
        history.pop_back();
        history.insert(history.begin(), x);
        return x;
    };

    const Matrix root0 = root_of(vol.at_origin());
    for (int s = 0; s < kBurnIn; ++s) {
        step(root0 * draw());
    }

    Matrix data(T + p, d);
    for (int j = 0; j < p; ++j) {
        // Row j holds X_{j-p+1}; history[0] is X_0.
        data.row(j) = history[static_cast<std::size_t>(p - 1 - j)].transpose();
    }
    if (innovations != nullptr) {
        innovations->resize(T, d);
    }

    const bool constant = vol.is_constant();
    const Matrix root_const = constant ? root0 : Matrix();
    for (int t = 1; t <= T; ++t) {
        const Vector u =
            (constant ? root_const : root_of(vol.at(static_cast<double>(t) / T))) * draw();
        if (innovations != nullptr) {
            innovations->row(t - 1) = u.transpose();
        }
        data.row(t + p - 1) = step(u).transpose();
    }
    return Sample(std::move(data), p);
}

}  // namespace hetvar
