#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "hetvar/error.hpp"
#include "hetvar/estimators.hpp"
#include "hetvar/model.hpp"
#include "support.hpp"

using namespace hetvar;

namespace {

Matrix design_a() {
    Matrix a(2, 2);
    a << 0.2, 0.0, 0.1, 0.2;
    return a;
}

const VolatilitySpec& trend() {
    static const VolatilitySpec v(vol::LinearTrend{0.6, 20.0, 20.0 / 3.0});
    return v;
}

/// Noise-free path X_t = Σ A_j X_{t-j} from a random start, plus one innovation
/// per coordinate at the beginning so that the regressors are not collinear.
Sample noiseless_path(const VarSpec& spec, int T, std::mt19937_64& rng) {
    const int d = spec.d();
    const int p = spec.p();
    Matrix data(T + p, d);
    data.topRows(p) = fixtures::random_matrix(rng, p, d);
    for (int t = p; t < T + p; ++t) {
        Vector x = Vector::Zero(d);
        for (int j = 1; j <= p; ++j) {
            x += spec.coeff(j) * data.row(t - j).transpose();
        }
        data.row(t) = x.transpose();
    }
    return Sample(data, p);
}

/// GLS through whitening and a QR least-squares solve.
Vector whitened_gls(const Sample& s, int p, const std::vector<Matrix>& path) {
    const int d = s.d();
    const int k = p * d * d;
    Matrix z(s.T() * d, k);
    Vector y(s.T() * d);
    for (int t = 1; t <= s.T(); ++t) {
        const Matrix w = linalg::sym_inv_sqrt(path[t - 1]);
        const Matrix reg = linalg::kron(s.regressor(t).transpose(), Matrix::Identity(d, d));
        z.middleRows((t - 1) * d, d) = w * reg;
        y.segment((t - 1) * d, d) = w * s.x(t);
    }
    return z.householderQr().solve(y);
}

}  // namespace

TEST(Ols, ZeroNoiseRecoversA) {
    std::mt19937_64 rng(30);
    Matrix a(2, 2);
    a << 0.9, -0.3, 0.4, 0.5;
    // complex eigenvalues keep a noiseless VAR(1) path from collapsing to a line
    const Sample s = noiseless_path(VarSpec({a}), 40, rng);
    const Fit fit = ols_fit(s, 1);
    EXPECT_LT((fit.theta - linalg::vec(a)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(fit.residuals.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Ols, ScalarAr1Formula) {
    const Sample s = simulate(VarSpec({Matrix::Constant(1, 1, 0.5)}), VolatilitySpec::homoscedastic(1),
                              200, 31);
    double num = 0.0;
    double den = 0.0;
    for (int t = 1; t <= 200; ++t) {
        num += s.x(t)(0) * s.x(t - 1)(0);
        den += s.x(t - 1)(0) * s.x(t - 1)(0);
    }
    EXPECT_NEAR(ols_fit(s, 1).theta(0), num / den, 1e-13);
}

TEST(Ols, Consistency) {
    const Sample s = simulate(VarSpec({design_a()}), VolatilitySpec::homoscedastic(2), 10000, 32);
    EXPECT_LT((ols_fit(s, 1).theta - linalg::vec(design_a())).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Ols, NormalEquationsAndResidualIdentity) {
    std::mt19937_64 rng(33);
    for (int rep = 0; rep < 20; ++rep) {
        const int d = 1 + rep % 3;
        const int p = 1 + rep % 2;
        const VarSpec spec = fixtures::random_stable_spec(rng, d, p);
        const Sample s = simulate(spec, VolatilitySpec::homoscedastic(d), 120, 100 + rep);
        const Fit fit = ols_fit(s, p);
        const Matrix ortho = fit.residuals.transpose() * s.regressors().transpose() / s.T();
        EXPECT_LT(ortho.norm(), 1e-10);
        for (int t = 1; t <= s.T(); ++t) {
            const Vector u = s.x(t) - linalg::kron(s.regressor(t).transpose(), Matrix::Identity(d, d)) *
                                          fit.theta;
            EXPECT_LT((u - fit.residuals.row(t - 1).transpose()).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(Ols, RejectsShortSamples) {
    std::mt19937_64 rng(34);
    const Sample s(fixtures::random_matrix(rng, 8, 2), 1);
    EXPECT_THROW(ols_fit(s, 1), DataError);
}

TEST(Ols, CollinearRegressorsAreSingular) {
    Matrix data(30, 2);
    for (int i = 0; i < 30; ++i) {
        data(i, 0) = std::sin(0.3 * i);
        data(i, 1) = 2.0 * data(i, 0);
    }
    EXPECT_THROW(ols_fit(Sample(data, 1), 1), SingularMatrixError);
}

TEST(Residuals, PlugInIdentities) {
    Matrix u;
    const VarSpec spec({design_a()});
    const Sample s = simulate(spec, trend(), 80, 35, &u);
    EXPECT_LT((residuals(s, 1, spec.theta()) - u).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(residuals(s, 1, Vector::Zero(4)), s.responses().transpose());
    EXPECT_THROW(residuals(s, 1, Vector::Zero(3)), InvalidArgument);
}

TEST(Gls, ConstantPathEqualsOls) {
    std::mt19937_64 rng(36);
    for (int rep = 0; rep < 20; ++rep) {
        const int d = 1 + rep % 3;
        const int p = 1 + rep % 2;
        const VarSpec spec = fixtures::random_stable_spec(rng, d, p);
        const Matrix sigma = fixtures::random_spd(rng, d);
        const Sample s = simulate(spec, VolatilitySpec(vol::Constant{sigma}), 150, 200 + rep);
        const Fit gls = gls_fit(s, p, std::vector<Matrix>(s.T(), sigma));
        EXPECT_LT((gls.theta - ols_fit(s, p).theta).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Gls, MatchesWhitenedLeastSquares) {
    std::mt19937_64 rng(37);
    for (int rep = 0; rep < 10; ++rep) {
        const int p = 1 + rep % 2;
        const VarSpec spec = fixtures::random_stable_spec(rng, 2, p);
        const Sample s = simulate(spec, trend(), 100, 300 + rep);
        const auto path = volatility_path(trend(), s.T());
        const Fit gls = gls_fit(s, p, path);
        EXPECT_LT((gls.theta - whitened_gls(s, p, path)).cwiseAbs().maxCoeff(), 1e-10);
        // weighted normal equations
        Matrix eq = Matrix::Zero(2, 2 * p);
        for (int t = 1; t <= s.T(); ++t) {
            eq += linalg::inverse_spd(path[t - 1]) * gls.residuals.row(t - 1).transpose() *
                  s.regressor(t).transpose();
        }
        EXPECT_LT((eq / s.T()).norm(), 1e-10);
    }
}

TEST(Gls, ZeroNoise) {
    std::mt19937_64 rng(38);
    Matrix a(2, 2);
    a << 0.9, -0.3, 0.4, 0.5;
    const Sample s = noiseless_path(VarSpec({a}), 40, rng);
    const Fit fit = gls_fit(s, 1, volatility_path(trend(), 40));
    EXPECT_LT((fit.theta - linalg::vec(a)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Gls, ScaleInvariance) {
    const Sample s = simulate(VarSpec({design_a()}), trend(), 100, 39);
    auto path = volatility_path(trend(), 100);
    const Vector base = gls_fit(s, 1, path).theta;
    for (double c : {0.1, 10.0}) {
        auto scaled = path;
        for (auto& m : scaled) {
            m *= c;
        }
        EXPECT_LT((gls_fit(s, 1, scaled).theta - base).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Gls, RejectsBadPaths) {
    const Sample s = simulate(VarSpec({design_a()}), trend(), 50, 40);
    EXPECT_THROW(gls_fit(s, 1, volatility_path(trend(), 49)), InvalidArgument);
    auto path = volatility_path(trend(), 50);
    path[10] = -path[10];
    EXPECT_THROW(gls_fit(s, 1, path), NotPositiveDefiniteError);
}

TEST(Gls, MoreEfficientThanOls) {
    const VarSpec spec({design_a()});
    const Vector theta0 = spec.theta();
    const auto path = volatility_path(trend(), 400);
    Vector mse_ols = Vector::Zero(4);
    Vector mse_gls = Vector::Zero(4);
    for (int r = 0; r < 200; ++r) {
        const Sample s = simulate(spec, trend(), 400, 1000 + r);
        mse_ols += (ols_fit(s, 1).theta - theta0).cwiseAbs2();
        mse_gls += (gls_fit(s, 1, path).theta - theta0).cwiseAbs2();
    }
    for (int k = 0; k < 4; ++k) {
        EXPECT_LE(mse_gls(k), mse_ols(k)) << "coefficient " << k;
    }
}

TEST(Als, RecordsPipeline) {
    const Sample s = simulate(VarSpec({design_a()}), trend(), 200, 41);
    AlsOptions opts;
    opts.grid = log_grid(0.01, 0.5, 20);
    const Fit fit = als_fit(s, 1, opts);
    ASSERT_TRUE(fit.bandwidths);
    ASSERT_TRUE(fit.vol_path);
    EXPECT_EQ(fit.method, Method::Als);
    EXPECT_EQ(fit.vol_path->sigmas.size(), 200U);
    const Fit ols = ols_fit(s, 1);
    const auto bw = select_bandwidths(ols.residuals, opts.grid, opts.mode, opts.kernel, opts.nu);
    EXPECT_EQ(fit.bandwidths->values(), bw.values());
    const auto path = smooth_volatility(ols.residuals, bw, opts.kernel, opts.nu);
    EXPECT_EQ(fit.theta, gls_fit(s, 1, path.sigmas).theta);
    EXPECT_EQ(als_fit(s, 1, opts).theta, fit.theta);
}

TEST(Als, FlatSmootherApproachesOls) {
    const Sample s = simulate(VarSpec({design_a()}), VolatilitySpec::homoscedastic(2), 500, 42);
    AlsOptions opts;
    opts.grid = {0.5};
    const Fit als = als_fit(s, 1, opts);
    const Fit ols = ols_fit(s, 1);
    EXPECT_LT((als.theta - ols.theta).cwiseAbs().maxCoeff(), 1e-2 * ols.theta.cwiseAbs().maxCoeff());
}

TEST(Als, ZeroNoiseRecoversA) {
    // residuals vanish; ν escalation keeps the weights finite
    std::mt19937_64 rng(43);
    Matrix a(2, 2);
    a << 0.9, -0.3, 0.4, 0.5;
    const Sample s = noiseless_path(VarSpec({a}), 40, rng);
    AlsOptions opts;
    opts.grid = log_grid(0.05, 0.5, 5);
    opts.nu = 1e-6;
    const Fit fit = als_fit(s, 1, opts);
    EXPECT_LT((fit.theta - linalg::vec(a)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Als, CloserToGlsThanOls) {
    const VarSpec spec({design_a()});
    const auto path = volatility_path(trend(), 400);
    AlsOptions opts;
    opts.grid = log_grid(0.01, 0.5, 20);
    std::vector<double> gap_als;
    std::vector<double> gap_ols;
    for (int r = 0; r < 200; ++r) {
        const Sample s = simulate(spec, trend(), 400, 2000 + r);
        const Vector gls = gls_fit(s, 1, path).theta;
        gap_als.push_back((als_fit(s, 1, opts).theta - gls).norm());
        gap_ols.push_back((ols_fit(s, 1).theta - gls).norm());
    }
    std::nth_element(gap_als.begin(), gap_als.begin() + 100, gap_als.end());
    std::nth_element(gap_ols.begin(), gap_ols.begin() + 100, gap_ols.end());
    EXPECT_LT(gap_als[100], gap_ols[100]);
}

TEST(Estimators, DemeanFlagIsRecorded) {
    Matrix data = simulate(VarSpec({design_a()}), trend(), 100, 44).data();
    data.col(0).array() += 5.0;
    const Sample s(data, 1);
    const Fit fit = ols_fit(s, 1, true);
    EXPECT_TRUE(fit.demeaned);
    EXPECT_FALSE(ols_fit(s, 1).demeaned);
    EXPECT_EQ(fit.theta, ols_fit(s.demeaned(), 1).theta);
}

TEST(Estimators, LagOrderRewindows) {
    const Sample s = simulate(VarSpec({design_a()}), trend(), 100, 45);
    const Fit fit = ols_fit(s, 2);
    EXPECT_EQ(fit.T(), 99);
    EXPECT_EQ(fit.theta.size(), 8);
}
