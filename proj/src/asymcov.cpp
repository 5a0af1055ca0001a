#include "hetvar/asymcov.hpp"

#include <algorithm>
#include <cmath>

#include "hetvar/error.hpp"

namespace hetvar {

std::string to_string(CovVariant variant) {
    return variant == CovVariant::Residual ? "residual" : "delta";
}

namespace {

Sample aligned(const Sample& sample, int p, const Matrix* residuals) {
    Sample s = prepare_sample(sample, p, false);
    if (residuals != nullptr && (residuals->rows() != s.T() || residuals->cols() != s.d())) {
        throw InvalidArgument("residuals must be T x d and aligned with the sample");
    }
    return s;
}

Matrix regressor_gram(const Sample& s) {
    const Matrix z = s.regressors();
    return (z * z.transpose()) / s.T();
}

}  // namespace

Matrix omega3_hat(const Matrix& residuals) {
    if (residuals.rows() < 2) {
        throw InvalidArgument("omega3_hat: need T >= 2");
    }
    return (residuals.transpose() * residuals) / static_cast<double>(residuals.rows());
}

Matrix omega2_hat(const Matrix& residuals) {
    const Eigen::Index n = residuals.rows();
    const Eigen::Index d = residuals.cols();
    if (n < 2) {
        throw InvalidArgument("omega2_hat: need T >= 2");
    }
    Matrix out = Matrix::Zero(d * d, d * d);
    for (Eigen::Index t = 1; t < n; ++t) {
        const Vector prev = residuals.row(t - 1).transpose();
        const Vector cur = residuals.row(t).transpose();
        out.noalias() += linalg::kron(prev * prev.transpose(), cur * cur.transpose());
    }
    return out / static_cast<double>(n);
}

Matrix lambda2_hat(const Sample& sample, int p, const Matrix& residuals) {
    const Sample s = aligned(sample, p, &residuals);
    const Matrix z = s.regressors();
    const int k = p * s.d() * s.d();
    Matrix out = Matrix::Zero(k, k);
    for (int t = 0; t < s.T(); ++t) {
        const Vector zt = z.col(t);
        const Vector ut = residuals.row(t).transpose();
        out.noalias() += linalg::kron(zt * zt.transpose(), ut * ut.transpose());
    }
    return out / s.T();
}

Matrix lambda3_hat(const Sample& sample, int p) {
    const Sample s = aligned(sample, p, nullptr);
    return linalg::kron(regressor_gram(s), Matrix::Identity(s.d(), s.d()));
}

Matrix lambda1_check(const Sample& sample, int p, const std::vector<Matrix>& sigmas) {
    const Sample s = aligned(sample, p, nullptr);
    if (static_cast<int>(sigmas.size()) != s.T()) {
        throw InvalidArgument("lambda1_check: path length must equal T");
    }
    const Matrix z = s.regressors();
    const int k = p * s.d() * s.d();
    Matrix out = Matrix::Zero(k, k);
    for (int t = 0; t < s.T(); ++t) {
        const Vector zt = z.col(t);
        out.noalias() += linalg::kron(zt * zt.transpose(),
                                      linalg::inverse_spd(sigmas[static_cast<std::size_t>(t)]));
    }
    return out / s.T();
}

Matrix omega1_check(const std::vector<Matrix>& sigmas) {
    if (sigmas.empty()) {
        throw InvalidArgument("omega1_check: empty path");
    }
    const Eigen::Index d = sigmas.front().rows();
    Matrix out = Matrix::Zero(d * d, d * d);
    for (const auto& s : sigmas) {
        out.noalias() += linalg::kron(s, linalg::inverse_spd(s));
    }
    return out / static_cast<double>(sigmas.size());
}

Matrix j_hat(const Sample& sample, int p, const Matrix& residuals) {
    const Sample s = aligned(sample, p, &residuals);
    return linalg::kron(regressor_gram(s), linalg::inverse_symmetric(omega3_hat(residuals)));
}

Matrix delta_lambda(const Matrix& omega, const Matrix& delta, CovKind kind) {
    if (omega.rows() != omega.cols() || delta.rows() != delta.cols()) {
        throw InvalidArgument("delta_lambda: square matrices required");
    }
    Eigen::Index d = omega.rows();
    Matrix top;
    if (kind == CovKind::OlsBread) {
        top = linalg::kron(omega, Matrix::Identity(d, d));
    } else {
        d = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(omega.rows()))));
        if (d * d != omega.rows()) {
            throw InvalidArgument("delta_lambda: Omega_1 and Omega_2 must be d^2 x d^2");
        }
        top = omega;
    }
    if (delta.rows() % d != 0) {
        throw InvalidArgument("delta_lambda: companion size must be a multiple of d");
    }
    const Eigen::Index n = delta.rows() * d;  // p d²
    if (n > kMaxDeltaDim) {
        throw InvalidArgument("delta_lambda: p*d^2 exceeds the dense operator limit");
    }
    if (!(spectral_radius(delta) < 1.0 - kStabilityMargin)) {
        throw InstabilityError("delta_lambda: companion matrix is not stable");
    }
    const Matrix a = linalg::kron(delta, Matrix::Identity(d, d));
    const Matrix op = Matrix::Identity(n * n, n * n) - linalg::kron(a, a);
    Matrix embedded = Matrix::Zero(n, n);
    embedded.topLeftCorner(d * d, d * d) = top;

    Eigen::PartialPivLU<Matrix> lu(op);
    if (!(lu.rcond() >= linalg::kMinRcond)) {
        throw SingularMatrixError("delta_lambda: operator is singular");
    }
    const Vector sol = lu.solve(linalg::vec(embedded));
    return linalg::symmetrize(linalg::unvec(sol, n, n));
}

MaVarianceMap::MaVarianceMap(const VarSpec& spec) : d_(spec.d()), p_(spec.p()) {
    const MaCoefficients ma = ma_coefficients_truncated(spec);
    // ψ̃_i has a nonzero block as long as i - p + 1 <= truncation.
    terms_ = ma.truncation() + static_cast<std::size_t>(p_);
    const int pd = p_ * d_;
    for (int a = 0; a < d_; ++a) {
        for (int b = a; b < d_; ++b) {
            Matrix unit = Matrix::Zero(d_, d_);
            unit(a, b) = 1.0;
            unit(b, a) = 1.0;
            Matrix image = Matrix::Zero(pd, pd);
            for (std::size_t i = 0; i < terms_; ++i) {
                const long li = static_cast<long>(i);
                for (int j = 0; j < p_; ++j) {
                    const Matrix left = ma.at(li - j) * unit;
                    for (int k = 0; k < p_; ++k) {
                        image.block(j * d_, k * d_, d_, d_).noalias() +=
                            left * ma.at(li - k).transpose();
                    }
                }
            }
            basis_.push_back(std::move(image));
        }
    }
}

Matrix MaVarianceMap::operator()(const Matrix& s) const {
    if (s.rows() != d_ || s.cols() != d_) {
        throw InvalidArgument("MaVarianceMap: argument must be d x d");
    }
    Matrix out = Matrix::Zero(p_ * d_, p_ * d_);
    std::size_t idx = 0;
    for (int a = 0; a < d_; ++a) {
        for (int b = a; b < d_; ++b) {
            out.noalias() += 0.5 * (s(a, b) + s(b, a)) * basis_[idx++];
        }
    }
    return out;
}

TheoreticalCov theoretical_covariances(const VarSpec& spec, const VolatilitySpec& vol,
                                       int quad_points) {
    if (vol.dim() != spec.d()) {
        throw InvalidArgument("volatility dimension does not match the VAR");
    }
    const MaVarianceMap map(spec);
    const int d = spec.d();
    const int pd = spec.p() * d;
    const int k = pd * d;
    TheoreticalCov out{Matrix::Zero(k, k), Matrix::Zero(k, k), Matrix::Zero(pd, pd),
                       Matrix(),           Matrix::Zero(d * d, d * d),
                       Matrix::Zero(d * d, d * d), Matrix::Zero(d, d)};
    for (const auto& node : quadrature_nodes(vol, quad_points)) {
        const Matrix sigma = vol.at(node.r);
        const Matrix inv = linalg::inverse_spd(sigma);
        const Matrix g = map(sigma);
        out.lambda1.noalias() += node.weight * linalg::kron(g, inv);
        out.lambda2.noalias() += node.weight * linalg::kron(g, sigma);
        out.lambda3.noalias() += node.weight * g;
        out.omega1.noalias() += node.weight * linalg::kron(sigma, inv);
        out.omega2.noalias() += node.weight * linalg::kron(sigma, sigma);
        out.omega3.noalias() += node.weight * sigma;
    }
    const Matrix gram = out.lambda3;
    out.lambda3 = linalg::kron(gram, Matrix::Identity(d, d));
    out.j = linalg::kron(gram, linalg::inverse_spd(out.omega3));
    out.lambda1 = linalg::symmetrize(out.lambda1);
    out.lambda2 = linalg::symmetrize(out.lambda2);
    out.lambda3 = linalg::symmetrize(out.lambda3);
    out.j = linalg::symmetrize(out.j);
    return out;
}

Matrix theoretical_lambda(const VarSpec& spec, const VolatilitySpec& vol, CovKind kind,
                          int quad_points) {
    const TheoreticalCov all = theoretical_covariances(spec, vol, quad_points);
    switch (kind) {
        case CovKind::Gls:
            return all.lambda1;
        case CovKind::OlsMeat:
            return all.lambda2;
        case CovKind::OlsBread:
            return all.lambda3;
    }
    return {};
}

Matrix theoretical_omega(const VolatilitySpec& vol, CovKind kind, int quad_points) {
    return integrate(vol, quad_points, [kind](double, const Matrix& sigma) -> Matrix {
        switch (kind) {
            case CovKind::Gls:
                return linalg::kron(sigma, linalg::inverse_spd(sigma));
            case CovKind::OlsMeat:
                return linalg::kron(sigma, sigma);
            case CovKind::OlsBread:
                return sigma;
        }
        return {};
    });
}

double example1_variance_ratio(double a1, const vol::PiecewiseStep& step) {
    if (!(std::abs(a1) < 1.0)) {
        throw InstabilityError("example1_variance_ratio: need |a1| < 1");
    }
    if (step.base.size() != 2) {
        throw InvalidArgument("example1_variance_ratio: bivariate volatility required");
    }
    const VolatilitySpec vol(step);
    std::vector<double> knots{0.0};
    for (double b : vol.breakpoints()) {
        knots.push_back(b);
    }
    knots.push_back(1.0);
    double int1 = 0.0;
    double int12 = 0.0;
    double ratio12 = 0.0;
    for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
        const double len = knots[s + 1] - knots[s];
        const Matrix sigma = vol.at(0.5 * (knots[s] + knots[s + 1]));
        int1 += len * sigma(0, 0);
        int12 += len * sigma(0, 0) * sigma(1, 1);
        ratio12 += len * sigma(0, 0) / sigma(1, 1);
    }
    // (1 − a₁²) multiplies both asymptotic variances and cancels.
    return int12 / (int1 * int1) * ratio12;
}

double example2_kappa(const VolatilitySpec& vol, int quad_points) {
    if (vol.dim() != 2) {
        throw InvalidArgument("example2_kappa: bivariate volatility required");
    }
    const Matrix ints = integrate(vol, quad_points, [](double, const Matrix& sigma) -> Matrix {
        if (sigma(0, 1) != 0.0 || sigma(1, 0) != 0.0) {
            throw InvalidArgument("example2_kappa: diagonal volatility required");
        }
        Matrix v(3, 1);
        v << sigma(0, 0), sigma(1, 1), sigma(0, 0) * sigma(1, 1);
        return v;
    });
    return ints(2, 0) / (ints(0, 0) * ints(1, 0));
}

Matrix sandwich(const Matrix& lambda2, const Matrix& lambda3) {
    const Matrix inv3 = linalg::inverse_symmetric(lambda3);
    return linalg::symmetrize(inv3 * lambda2 * inv3);
}

PsiResult psi_matrix(const Matrix& lambda2, const Matrix& lambda3, const Matrix& j,
                     const Matrix& r_matrix) {
    const Matrix projected_j = linalg::symmetrize(r_matrix * linalg::inverse_symmetric(j) *
                                                  r_matrix.transpose());
    Eigen::LDLT<Matrix> check(projected_j);
    if (check.info() != Eigen::Success || !(check.rcond() >= linalg::kMinRcond)) {
        throw SingularMatrixError("psi_matrix: R J^-1 R' is singular");
    }
    const Matrix root = linalg::sym_inv_sqrt(projected_j);
    const Matrix meat = r_matrix * sandwich(lambda2, lambda3) * r_matrix.transpose();
    PsiResult out;
    out.psi = linalg::symmetrize(root * meat * root);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(out.psi, Eigen::EigenvaluesOnly);
    out.kappas = eig.eigenvalues().reverse();
    return out;
}

CovEstimates ols_cov_estimates(const Sample& sample, const Fit& ols, CovVariant variant) {
    const int p = ols.p;
    CovEstimates out;
    out.variant = variant;
    out.omega2 = omega2_hat(ols.residuals);
    out.omega3 = omega3_hat(ols.residuals);
    out.j_hat = j_hat(sample, p, ols.residuals);
    if (variant == CovVariant::Residual) {
        out.lambda2 = lambda2_hat(sample, p, ols.residuals);
        out.lambda3 = lambda3_hat(sample, p);
    } else {
        const Matrix delta = companion(ols.spec());
        out.lambda2 = delta_lambda(out.omega2, delta, CovKind::OlsMeat);
        out.lambda3 = delta_lambda(out.omega3, delta, CovKind::OlsBread);
    }
    return out;
}

Matrix weighted_lambda1(const Sample& sample, int p, const std::vector<Matrix>& sigmas,
                        const Vector& theta, CovVariant variant) {
    if (variant == CovVariant::Residual) {
        return lambda1_check(sample, p, sigmas);
    }
    const int d = sample.d();
    return delta_lambda(omega1_check(sigmas), companion(VarSpec::from_theta(theta, d, p)),
                        CovKind::Gls);
}

CovEstimates als_cov_estimates(const Sample& sample, const Fit& ols, const Fit& als,
                               CovVariant variant) {
    if (!als.vol_path) {
        throw InvalidArgument("als_cov_estimates: fit carries no smoothed volatility path");
    }
    CovEstimates out = ols_cov_estimates(sample, ols, variant);
    out.omega1 = omega1_check(als.vol_path->sigmas);
    out.lambda1 = weighted_lambda1(sample, als.p, als.vol_path->sigmas, als.theta, variant);
    return out;
}

}  // namespace hetvar
