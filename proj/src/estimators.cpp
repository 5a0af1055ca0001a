#include "hetvar/estimators.hpp"

#include "hetvar/error.hpp"

namespace hetvar {

std::string to_string(Method method) {
    switch (method) {
        case Method::Ols:
            return "OLS";
        case Method::Gls:
            return "GLS";
        case Method::Als:
            return "ALS";
    }
    return "?";
}

std::vector<double> default_bandwidth_grid() { return log_grid(0.01, 0.5, 50); }

Sample prepare_sample(const Sample& sample, int p, bool demean) {
    if (p < 1) {
        throw InvalidArgument("lag order must be positive");
    }
    Sample out = p == sample.p() ? sample : sample.with_presample(p);
    return demean ? out.demeaned() : out;
}

Matrix residuals(const Sample& sample, int p, const Vector& theta) {
    const Sample s = prepare_sample(sample, p, false);
    const int d = s.d();
    if (theta.size() != static_cast<Eigen::Index>(p) * d * d) {
        throw InvalidArgument("residuals: theta must have length p*d*d");
    }
    const Matrix b = linalg::unvec(theta, d, p * d);
    return (s.responses() - b * s.regressors()).transpose();
}

namespace {

void require_observations(const Sample& s, int p) {
    if (s.T() <= p * s.d() + 5) {
        throw DataError("not enough observations: need T > p*d + 5");
    }
}

}  // namespace

Fit ols_fit(const Sample& sample, int p, bool demean) {
    const Sample s = prepare_sample(sample, p, demean);
    require_observations(s, p);
    const Matrix z = s.regressors();
    const Matrix y = s.responses();
    const double inv_t = 1.0 / s.T();
    const Matrix gram = inv_t * (z * z.transpose());
    const Matrix cross = inv_t * (z * y.transpose());
    const Matrix b = linalg::solve_symmetric(gram, cross).transpose();

    Fit fit;
    fit.theta = linalg::vec(b);
    fit.method = Method::Ols;
    fit.residuals = (y - b * z).transpose();
    fit.d = s.d();
    fit.p = p;
    fit.demeaned = demean;
    return fit;
}

Fit gls_fit(const Sample& sample, int p, const std::vector<Matrix>& vol_path, bool demean) {
    const Sample s = prepare_sample(sample, p, demean);
    require_observations(s, p);
    const int d = s.d();
    const int n = s.T();
    if (static_cast<int>(vol_path.size()) != n) {
        throw InvalidArgument("gls_fit: volatility path length must equal T");
    }
    const Matrix z = s.regressors();
    const Matrix y = s.responses();
    const int k = p * d * d;
    Matrix moment = Matrix::Zero(k, k);
    Vector rhs = Vector::Zero(k);
    for (int t = 0; t < n; ++t) {
        const Matrix& sigma = vol_path[static_cast<std::size_t>(t)];
        if (sigma.rows() != d || sigma.cols() != d) {
            throw InvalidArgument("gls_fit: volatility matrices must be d x d");
        }
        const Matrix w = linalg::inverse_spd(sigma);
        const Vector zt = z.col(t);
        moment.noalias() += linalg::kron(zt * zt.transpose(), w);
        rhs.noalias() += linalg::kron(zt, w * y.col(t));
    }
    moment /= n;
    rhs /= n;
    const Vector theta = linalg::solve_symmetric(moment, rhs);

    Fit fit;
    fit.theta = theta;
    fit.method = Method::Gls;
    fit.residuals = (y - linalg::unvec(theta, d, p * d) * z).transpose();
    fit.d = d;
    fit.p = p;
    fit.demeaned = demean;
    return fit;
}

Fit als_fit(const Sample& sample, int p, const AlsOptions& options) {
    const Sample s = prepare_sample(sample, p, options.demean);
    const Fit ols = ols_fit(s, p);
    const BandwidthSet bw =
        select_bandwidths(ols.residuals, options.grid, options.mode, options.kernel, options.nu);
    SmoothedVolPath path = smooth_volatility(ols.residuals, bw, options.kernel, options.nu);
    Fit fit = gls_fit(s, p, path.sigmas);
    fit.method = Method::Als;
    fit.bandwidths = bw;
    fit.vol_path = std::move(path);
    fit.demeaned = options.demean;
    return fit;
}

std::vector<Matrix> volatility_path(const VolatilitySpec& vol, int T) {
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t) {
        out.push_back(vol.at(static_cast<double>(t) / T));
    }
    return out;
}

}  // namespace hetvar
