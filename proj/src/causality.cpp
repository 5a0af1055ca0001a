#include "hetvar/causality.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "hetvar/error.hpp"

namespace hetvar {

RestrictionMatrix restriction_matrix(int p, int d, int d1) {
    if (p < 1 || d < 2 || d1 < 1 || d1 >= d) {
        throw InvalidArgument("restriction_matrix: need p >= 1 and 1 <= d1 < d");
    }
    const int d2 = d - d1;
    RestrictionMatrix out;
    out.p = p;
    out.d = d;
    out.d1 = d1;
    out.r = Matrix::Zero(p * d1 * d2, p * d * d);
    int row = 0;
    for (int lag = 0; lag < p; ++lag) {
        for (int c = d1; c < d; ++c) {
            for (int k = 0; k < d1; ++k) {
                out.r(row++, lag * d * d + c * d + k) = 1.0;
            }
        }
    }
    return out;
}

std::string to_string(WaldMethod method) {
    switch (method) {
        case WaldMethod::Ols:
            return "W_OLS";
        case WaldMethod::OlsDelta:
            return "W_OLS_delta";
        case WaldMethod::OlsMax:
            return "W_OLS_max";
        case WaldMethod::Standard:
            return "W_S";
        case WaldMethod::Als:
            return "W_ALS";
        case WaldMethod::AlsDelta:
            return "W_ALS_delta";
        case WaldMethod::AlsMax:
            return "W_ALS_max";
        case WaldMethod::Gls:
            return "W_GLS";
        case WaldMethod::GlsDelta:
            return "W_GLS_delta";
        case WaldMethod::GlsMax:
            return "W_GLS_max";
    }
    return "?";
}

WaldMethod wald_method_from_string(const std::string& name) {
    std::string key;
    for (char ch : name) {
        if (ch != '_' && ch != '-') {
            key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (key.rfind("w", 0) == 0 && key != "w") {
        key.erase(0, 1);
    }
    static const std::map<std::string, WaldMethod> names{
        {"ols", WaldMethod::Ols},         {"olsdelta", WaldMethod::OlsDelta},
        {"olsmax", WaldMethod::OlsMax},   {"s", WaldMethod::Standard},
        {"standard", WaldMethod::Standard}, {"als", WaldMethod::Als},
        {"alsdelta", WaldMethod::AlsDelta}, {"alsmax", WaldMethod::AlsMax},
        {"gls", WaldMethod::Gls},         {"glsdelta", WaldMethod::GlsDelta},
        {"glsmax", WaldMethod::GlsMax},
    };
    const auto it = names.find(key);
    if (it == names.end()) {
        throw InvalidArgument("unknown Wald test '" + name + "'");
    }
    return it->second;
}

std::vector<WaldMethod> all_feasible_methods() {
    return {WaldMethod::Ols, WaldMethod::OlsDelta, WaldMethod::OlsMax, WaldMethod::Standard,
            WaldMethod::Als, WaldMethod::AlsDelta, WaldMethod::AlsMax};
}

double wald_statistic(const Vector& theta, const Matrix& cov, const Matrix& r_matrix, int T) {
    if (r_matrix.cols() != theta.size() || cov.rows() != theta.size() ||
        cov.cols() != theta.size()) {
        throw InvalidArgument("wald_statistic: dimension mismatch");
    }
    const Vector rt = r_matrix * theta;
    const Matrix projected = linalg::symmetrize(r_matrix * cov * r_matrix.transpose());
    const Vector x = linalg::solve_symmetric(projected, rt);
    return std::max(0.0, static_cast<double>(T) * rt.dot(x));
}

namespace {

WaldResult chi2_result(double statistic, int df, WaldMethod method) {
    WaldResult out;
    out.statistic = statistic;
    out.df = df;
    out.method = method;
    out.distribution = Distribution::ChiSquare;
    out.p_value = chi2_sf(statistic, df);
    return out;
}

void require_method(const Fit& fit, Method expected, const char* what) {
    if (fit.method != expected) {
        throw InvalidArgument(std::string(what) + ": fit was produced by the wrong estimator");
    }
}

}  // namespace

WaldResult q_ols(const Fit& ols, const CovEstimates& cov, const RestrictionMatrix& r) {
    require_method(ols, Method::Ols, "q_ols");
    const double stat =
        wald_statistic(ols.theta, sandwich(cov.lambda2, cov.lambda3), r.r, ols.T());
    return chi2_result(stat, r.df(),
                       cov.variant == CovVariant::Residual ? WaldMethod::Ols : WaldMethod::OlsDelta);
}

WaldResult q_ols_delta(const Fit& ols, const CovEstimates& cov, const RestrictionMatrix& r) {
    if (cov.variant != CovVariant::Delta) {
        throw InvalidArgument("q_ols_delta: delta covariance estimates required");
    }
    return q_ols(ols, cov, r);
}

WaldResult q_s(const Fit& ols, const CovEstimates& cov, const RestrictionMatrix& r) {
    require_method(ols, Method::Ols, "q_s");
    const double stat =
        wald_statistic(ols.theta, linalg::inverse_symmetric(cov.j_hat), r.r, ols.T());
    return chi2_result(stat, r.df(), WaldMethod::Standard);
}

WaldResult q_als(const Fit& als, const CovEstimates& cov, const RestrictionMatrix& r) {
    require_method(als, Method::Als, "q_als");
    if (!cov.lambda1) {
        throw InvalidArgument("q_als: covariance estimates lack Lambda_1");
    }
    const double stat =
        wald_statistic(als.theta, linalg::inverse_symmetric(*cov.lambda1), r.r, als.T());
    return chi2_result(stat, r.df(),
                       cov.variant == CovVariant::Residual ? WaldMethod::Als : WaldMethod::AlsDelta);
}

WaldResult q_als_delta(const Fit& als, const CovEstimates& cov, const RestrictionMatrix& r) {
    if (cov.variant != CovVariant::Delta) {
        throw InvalidArgument("q_als_delta: delta covariance estimates required");
    }
    return q_als(als, cov, r);
}

WaldResult q_gls(const Fit& gls, const Matrix& lambda1, CovVariant variant,
                 const RestrictionMatrix& r) {
    require_method(gls, Method::Gls, "q_gls");
    const double stat = wald_statistic(gls.theta, linalg::inverse_symmetric(lambda1), r.r, gls.T());
    return chi2_result(stat, r.df(),
                       variant == CovVariant::Residual ? WaldMethod::Gls : WaldMethod::GlsDelta);
}

WaldResult q_max(const WaldResult& a, const WaldResult& b, WaldMethod method) {
    if (a.df != b.df) {
        throw InvalidArgument("q_max: degrees of freedom differ");
    }
    return chi2_result(std::max(a.statistic, b.statistic), a.df, method);
}

namespace {

bool needs(const std::vector<WaldMethod>& methods, std::initializer_list<WaldMethod> any) {
    return std::any_of(methods.begin(), methods.end(), [&](WaldMethod m) {
        return std::find(any.begin(), any.end(), m) != any.end();
    });
}

/// Lazily computed fits and covariance estimates shared by the requested tests.
class TestBench {
  public:
    TestBench(const Sample& sample, int p, int d1, const GrangerOptions& options)
        : sample_(prepare_sample(sample, p, options.demean)),
          p_(p),
          r_(restriction_matrix(p, sample.d(), d1)),
          options_(options) {}

    WaldResult run(WaldMethod method) {
        switch (method) {
            case WaldMethod::Ols:
                return q_ols(ols(), ols_cov(CovVariant::Residual), r_);
            case WaldMethod::OlsDelta:
                return q_ols_delta(ols(), ols_cov(CovVariant::Delta), r_);
            case WaldMethod::OlsMax:
                return q_max(run(WaldMethod::Ols), run(WaldMethod::OlsDelta), method);
            case WaldMethod::Standard:
                return standard();
            case WaldMethod::Als:
                return q_als(als(), als_cov(CovVariant::Residual), r_);
            case WaldMethod::AlsDelta:
                return q_als_delta(als(), als_cov(CovVariant::Delta), r_);
            case WaldMethod::AlsMax:
                return q_max(run(WaldMethod::Als), run(WaldMethod::AlsDelta), method);
            case WaldMethod::Gls:
                return q_gls(gls(), gls_lambda1(CovVariant::Residual), CovVariant::Residual, r_);
            case WaldMethod::GlsDelta:
                return q_gls(gls(), gls_lambda1(CovVariant::Delta), CovVariant::Delta, r_);
            case WaldMethod::GlsMax:
                return q_max(run(WaldMethod::Gls), run(WaldMethod::GlsDelta), method);
        }
        throw InvalidArgument("unknown Wald method");
    }

  private:
    const Fit& ols() {
        if (!ols_) {
            ols_ = ols_fit(sample_, p_);
        }
        return *ols_;
    }

    const Fit& als() {
        if (!als_) {
            AlsOptions opts = options_.als;
            opts.demean = false;
            als_ = als_fit(sample_, p_, opts);
        }
        return *als_;
    }

    const std::vector<Matrix>& true_path() {
        if (!options_.true_volatility) {
            throw InvalidArgument("GLS tests need the true volatility specification");
        }
        if (!path_) {
            path_ = volatility_path(*options_.true_volatility, sample_.T());
        }
        return *path_;
    }

    const Fit& gls() {
        if (!gls_) {
            gls_ = gls_fit(sample_, p_, true_path());
        }
        return *gls_;
    }

    const CovEstimates& ols_cov(CovVariant v) {
        auto& slot = v == CovVariant::Residual ? ols_res_ : ols_delta_;
        if (!slot) {
            slot = ols_cov_estimates(sample_, ols(), v);
        }
        return *slot;
    }

    const CovEstimates& als_cov(CovVariant v) {
        auto& slot = v == CovVariant::Residual ? als_res_ : als_delta_;
        if (!slot) {
            CovEstimates cov = ols_cov(CovVariant::Residual);
            cov.variant = v;
            cov.omega1 = omega1_check(als().vol_path->sigmas);
            cov.lambda1 = weighted_lambda1(sample_, p_, als().vol_path->sigmas, als().theta, v);
            slot = std::move(cov);
        }
        return *slot;
    }

    Matrix gls_lambda1(CovVariant v) {
        return weighted_lambda1(sample_, p_, true_path(), gls().theta, v);
    }

    WaldResult standard() {
        const CovEstimates& cov = ols_cov(CovVariant::Residual);
        WaldResult out = q_s(ols(), cov, r_);
        if (options_.corrected_standard) {
            const PsiResult psi = psi_matrix(cov.lambda2, cov.lambda3, cov.j_hat, r_.r);
            out.kappas = psi.kappas;
            if (psi.kappas.minCoeff() > 0.0) {
                out.corrected_p_value = weighted_chi2_sf(psi.kappas, out.statistic,
                                                         options_.weighted_draws,
                                                         options_.weighted_seed);
            }
        }
        return out;
    }

    Sample sample_;
    int p_;
    RestrictionMatrix r_;
    GrangerOptions options_;
    std::optional<Fit> ols_;
    std::optional<Fit> als_;
    std::optional<Fit> gls_;
    std::optional<std::vector<Matrix>> path_;
    std::optional<CovEstimates> ols_res_;
    std::optional<CovEstimates> ols_delta_;
    std::optional<CovEstimates> als_res_;
    std::optional<CovEstimates> als_delta_;
};

}  // namespace

WaldResult granger_test(const Sample& sample, int p, int d1, WaldMethod method,
                        const GrangerOptions& options) {
    return granger_tests(sample, p, d1, {method}, options).front();
}

std::vector<WaldResult> granger_tests(const Sample& sample, int p, int d1,
                                      const std::vector<WaldMethod>& methods,
                                      const GrangerOptions& options) {
    if (methods.empty()) {
        throw InvalidArgument("granger_tests: no methods requested");
    }
    TestBench bench(sample, p, d1, options);
    std::vector<WaldResult> out;
    out.reserve(methods.size());
    for (WaldMethod m : methods) {
        out.push_back(bench.run(m));
    }
    return out;
}

}  // namespace hetvar
