#include "hetvar/volatility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hetvar/error.hpp"
#include "hetvar/simd/kernels.hpp"

namespace hetvar {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(const std::vector<double>& values, const char* what) {
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidArgument(std::string(what) + ": variances must be positive and finite");
        }
    }
}

int validate(const VolatilitySpec::Form& form) {
    return std::visit(
        Overloaded{
            [](const vol::Constant& c) {
                if (c.sigma.rows() != c.sigma.cols() || c.sigma.rows() < 1) {
                    throw InvalidArgument("Constant volatility must be a square matrix");
                }
                if (linalg::max_asymmetry(c.sigma) > 1e-12 || !linalg::is_spd(c.sigma)) {
                    throw NotPositiveDefiniteError("Constant volatility must be SPD");
                }
                return static_cast<int>(c.sigma.rows());
            },
            [](const vol::PiecewiseStep& s) {
                if (s.base.empty() || s.base.size() != s.shifted.size() ||
                    s.base.size() != s.breaks.size()) {
                    throw InvalidArgument("PiecewiseStep: base, shifted and breaks must match");
                }
                require_positive(s.base, "PiecewiseStep");
                require_positive(s.shifted, "PiecewiseStep");
                for (double tau : s.breaks) {
                    if (!(tau >= 0.0 && tau <= 1.0)) {
                        throw InvalidArgument("PiecewiseStep: break fractions must lie in [0,1]");
                    }
                }
                return static_cast<int>(s.base.size());
            },
            [](const vol::LinearTrend& l) {
                if (!(l.gamma1 > -1.0) || !(l.gamma2 > -1.0) || !std::isfinite(l.gamma1) ||
                    !std::isfinite(l.gamma2) || !std::isfinite(l.rho)) {
                    throw InvalidArgument("LinearTrend: slopes must exceed -1");
                }
                return 2;
            },
            [](const vol::PowerTrend& p) {
                if (p.start.empty() || p.start.size() != p.end.size()) {
                    throw InvalidArgument("PowerTrend: start and end must match");
                }
                require_positive(p.start, "PowerTrend");
                require_positive(p.end, "PowerTrend");
                if (!(p.q > 0.0) || !std::isfinite(p.q)) {
                    throw InvalidArgument("PowerTrend: power must be positive");
                }
                return static_cast<int>(p.start.size());
            },
            [](const vol::Generic& g) {
                if (g.dim < 1 || !g.fn) {
                    throw InvalidArgument("Generic volatility needs a dimension and a callable");
                }
                for (double b : g.breaks) {
                    if (!(b > 0.0 && b < 1.0)) {
                        throw InvalidArgument("Generic volatility breakpoints must lie in (0,1)");
                    }
                }
                return g.dim;
            },
        },
        form);
}

}  // namespace

VolatilitySpec::VolatilitySpec(Form form) : form_(std::move(form)), dim_(validate(form_)) {}

std::vector<double> VolatilitySpec::breakpoints() const {
    std::vector<double> out = std::visit(
        Overloaded{
            [](const vol::PiecewiseStep& s) { return s.breaks; },
            [](const vol::Generic& g) { return g.breaks; },
            [](const auto&) { return std::vector<double>{}; },
        },
        form_);
    std::erase_if(out, [](double b) { return !(b > 0.0 && b < 1.0); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Matrix VolatilitySpec::eval(double r) const {
    return std::visit(
        Overloaded{
            [](const vol::Constant& c) -> Matrix { return c.sigma; },
            [r](const vol::PiecewiseStep& s) -> Matrix {
                const std::size_t d = s.base.size();
                Matrix out = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
                for (std::size_t k = 0; k < d; ++k) {
                    const auto i = static_cast<Eigen::Index>(k);
                    out(i, i) = r >= s.breaks[k] ? s.shifted[k] : s.base[k];
                }
                return out;
            },
            [r](const vol::LinearTrend& l) -> Matrix {
                const double a = 1.0 + l.gamma1 * r;
                const double b = 1.0 + l.gamma2 * r;
                Matrix out(2, 2);
                out(0, 0) = a * (1.0 + l.rho * l.rho);
                out(0, 1) = out(1, 0) = l.rho * std::sqrt(a) * std::sqrt(b);
                out(1, 1) = b;
                return out;
            },
            [r](const vol::PowerTrend& p) -> Matrix {
                const std::size_t d = p.start.size();
                Matrix out = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
                const double rq = std::pow(r, p.q);
                for (std::size_t k = 0; k < d; ++k) {
                    const auto i = static_cast<Eigen::Index>(k);
                    out(i, i) = p.start[k] + (p.end[k] - p.start[k]) * rq;
                }
                return out;
            },
            [r](const vol::Generic& g) -> Matrix {
                Matrix out = g.fn(r);
                if (out.rows() != g.dim || out.cols() != g.dim || !linalg::is_spd(out) ||
                    linalg::max_asymmetry(out) > 1e-10 * std::max(1.0, out.cwiseAbs().maxCoeff())) {
                    throw NotPositiveDefiniteError("Generic volatility is not SPD at r = " +
                                                   std::to_string(r));
                }
                return out;
            },
        },
        form_);
}

Matrix VolatilitySpec::at(double r) const {
    if (!(r > 0.0 && r <= 1.0)) {
        throw InvalidArgument("Sigma(r) is defined for r in (0, 1]");
    }
    return eval(r);
}

Matrix VolatilitySpec::at_origin() const {
    if (std::holds_alternative<vol::Generic>(form_)) {
        return eval(std::numeric_limits<double>::epsilon());
    }
    // The parametric forms are right-continuous at 0 when evaluated at r = 0.
    return eval(0.0);
}

std::vector<QuadratureNode> quadrature_nodes(const VolatilitySpec& vol, int points) {
    if (points < 1) {
        throw InvalidArgument("quadrature: need at least one point per segment");
    }
    std::vector<double> knots{0.0};
    for (double b : vol.breakpoints()) {
        knots.push_back(b);
    }
    knots.push_back(1.0);
    std::vector<QuadratureNode> nodes;
    nodes.reserve((knots.size() - 1) * static_cast<std::size_t>(points));
    for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
        const double lo = knots[s];
        const double h = (knots[s + 1] - lo) / points;
        for (int j = 0; j < points; ++j) {
            nodes.push_back({lo + (j + 0.5) * h, h});
        }
    }
    return nodes;
}

Matrix integrate(const VolatilitySpec& vol, int points,
                 const std::function<Matrix(double, const Matrix&)>& f) {
    Matrix total;
    for (const auto& node : quadrature_nodes(vol, points)) {
        Matrix term = f(node.r, vol.at(node.r));
        if (total.size() == 0) {
            total = Matrix::Zero(term.rows(), term.cols());
        }
        total.noalias() += node.weight * term;
    }
    return total;
}

double kernel_value(KernelId kernel, double z) {
    switch (kernel) {
        case KernelId::Gaussian:
            return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        case KernelId::Epanechnikov:
            return std::abs(z) < 1.0 ? 0.75 * (1.0 - z * z) : 0.0;
    }
    return 0.0;
}

std::string to_string(KernelId kernel) {
    return kernel == KernelId::Gaussian ? "gaussian" : "epanechnikov";
}

KernelId kernel_from_string(const std::string& name) {
    if (name == "gaussian") {
        return KernelId::Gaussian;
    }
    if (name == "epanechnikov") {
        return KernelId::Epanechnikov;
    }
    throw InvalidArgument("unknown kernel '" + name + "'");
}

Vector kernel_weights(int t, int T, double b, KernelId kernel) {
    if (T < 2 || t < 1 || t > T) {
        throw InvalidArgument("kernel_weights: need 1 <= t <= T and T >= 2");
    }
    if (!(b > 0.0)) {
        throw InvalidArgument("kernel_weights: bandwidth must be positive");
    }
    Vector w(T);
    const double scale = static_cast<double>(T) * b;
    for (int i = 1; i <= T; ++i) {
        w(i - 1) = i == t ? 0.0 : kernel_value(kernel, static_cast<double>(t - i) / scale);
    }
    const double total = w.sum();
    if (!(total > 0.0)) {
        throw DegenerateBandwidthError("kernel_weights: all weights vanish; bandwidth too small");
    }
    return w / total;
}

std::string to_string(BandwidthMode mode) {
    return mode == BandwidthMode::Single ? "single" : "per-cell";
}

BandwidthMode bandwidth_mode_from_string(const std::string& name) {
    if (name == "single") {
        return BandwidthMode::Single;
    }
    if (name == "per-cell" || name == "percell" || name == "per_cell") {
        return BandwidthMode::PerCell;
    }
    throw InvalidArgument("unknown bandwidth mode '" + name + "'");
}

BandwidthSet BandwidthSet::single(int d, double b) {
    if (d < 1 || !(b > 0.0)) {
        throw InvalidArgument("BandwidthSet: bandwidth must be positive");
    }
    return BandwidthSet(BandwidthMode::Single, Matrix::Constant(d, d, b));
}

BandwidthSet BandwidthSet::per_cell(const Matrix& b) {
    if (b.rows() != b.cols() || b.rows() < 1 || !(b.minCoeff() > 0.0) ||
        linalg::max_asymmetry(b) != 0.0) {
        throw InvalidArgument("BandwidthSet: per-cell bandwidths must be symmetric and positive");
    }
    return BandwidthSet(BandwidthMode::PerCell, b);
}

void BandwidthSet::set(int k, int l, double b) {
    if (!(b > 0.0)) {
        throw InvalidArgument("BandwidthSet: bandwidth must be positive");
    }
    values_(k, l) = b;
    values_(l, k) = b;
    if (mode_ == BandwidthMode::Single && !(values_.array() == b).all()) {
        mode_ = BandwidthMode::PerCell;
    }
}

namespace {

using CellIndex = std::vector<std::pair<int, int>>;

CellIndex upper_cells(int d) {
    CellIndex cells;
    for (int k = 0; k < d; ++k) {
        for (int l = k; l < d; ++l) {
            cells.emplace_back(k, l);
        }
    }
    return cells;
}

/// Leave-one-out Toeplitz smoother over the product series û_k û_l.
class CellSmoother {
  public:
    CellSmoother(const Matrix& residuals, KernelId kernel)
        : n_(static_cast<int>(residuals.rows())),
          d_(static_cast<int>(residuals.cols())),
          kernel_(kernel),
          cells_(upper_cells(d_)),
          ones_(static_cast<std::size_t>(n_), 1.0),
          taps_(2 * static_cast<std::size_t>(n_) - 1),
          den_(static_cast<std::size_t>(n_)) {
        if (n_ < 2) {
            throw InvalidArgument("smoothing needs at least two residual vectors");
        }
        if (!residuals.allFinite()) {
            throw InvalidArgument("residuals must be finite");
        }
        products_.reserve(cells_.size());
        for (const auto& [k, l] : cells_) {
            std::vector<double> y(static_cast<std::size_t>(n_));
            for (int i = 0; i < n_; ++i) {
                y[static_cast<std::size_t>(i)] = residuals(i, k) * residuals(i, l);
            }
            products_.push_back(std::move(y));
        }
    }

    int n() const { return n_; }
    int d() const { return d_; }
    const CellIndex& cells() const { return cells_; }

    /// Prepare taps and denominators for bandwidth b. Returns false when some
    /// denominator vanishes.
    bool load(double b) {
        if (!(b > 0.0)) {
            throw InvalidArgument("bandwidth must be positive");
        }
        const double scale = static_cast<double>(n_) * b;
        const std::size_t mid = static_cast<std::size_t>(n_) - 1;
        taps_[mid] = 0.0;
        for (std::size_t lag = 1; lag <= mid; ++lag) {
            const double k = kernel_value(kernel_, static_cast<double>(lag) / scale);
            taps_[mid + lag] = k;
            taps_[mid - lag] = k;
        }
        const auto& simd = simd::active_kernels();
        simd.lagged_dots(taps_.data(), ones_.size(), ones_.data(), den_.data());
        return std::all_of(den_.begin(), den_.end(), [](double v) { return v > 0.0; });
    }

    /// Smoothed series for cell index c under the loaded bandwidth.
    std::vector<double> smooth(std::size_t c) const {
        std::vector<double> out(static_cast<std::size_t>(n_));
        simd::active_kernels().lagged_dots(taps_.data(), out.size(), products_[c].data(),
                                           out.data());
        for (std::size_t t = 0; t < out.size(); ++t) {
            out[t] /= den_[t];
        }
        return out;
    }

  private:
    int n_;
    int d_;
    KernelId kernel_;
    CellIndex cells_;
    std::vector<std::vector<double>> products_;
    std::vector<double> ones_;
    std::vector<double> taps_;
    std::vector<double> den_;
};

std::vector<Matrix> assemble(const CellSmoother& smoother,
                             const std::vector<const std::vector<double>*>& series) {
    const int d = smoother.d();
    std::vector<Matrix> out(static_cast<std::size_t>(smoother.n()), Matrix(d, d));
    for (std::size_t c = 0; c < smoother.cells().size(); ++c) {
        const auto [k, l] = smoother.cells()[c];
        const auto& s = *series[c];
        for (std::size_t t = 0; t < out.size(); ++t) {
            out[t](k, l) = s[t];
            out[t](l, k) = s[t];
        }
    }
    return out;
}

Matrix regularize_one(const Matrix& raw, double nu) {
    if (nu == 0.0) {
        Eigen::LLT<Matrix> llt(raw);
        if (llt.info() == Eigen::Success) {
            return raw;
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(linalg::symmetrize(raw));
    Vector lambda = eig.eigenvalues();
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        const double l = std::abs(lambda(i)) < 1e-14 ? 0.0 : lambda(i);
        lambda(i) = std::sqrt(l * l + nu);
    }
    const Matrix& v = eig.eigenvectors();
    return linalg::symmetrize(v * lambda.asDiagonal() * v.transpose());
}

double score_path(const std::vector<Matrix>& raw, const Matrix& residuals, double nu) {
    double total = 0.0;
    for (std::size_t t = 0; t < raw.size(); ++t) {
        const auto row = residuals.row(static_cast<Eigen::Index>(t));
        const Matrix target = row.transpose() * row;
        total += (regularize_one(raw[t], nu) - target).squaredNorm();
    }
    return total;
}

void validate_grid(const std::vector<double>& grid) {
    if (grid.empty()) {
        throw InvalidArgument("bandwidth grid is empty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
            throw InvalidArgument("bandwidth grid must be positive and strictly increasing");
        }
    }
}

}  // namespace

std::vector<Matrix> smooth_outer_products(const Matrix& residuals, const BandwidthSet& bw,
                                          KernelId kernel) {
    CellSmoother smoother(residuals, kernel);
    if (bw.dim() != smoother.d()) {
        throw InvalidArgument("bandwidth set dimension does not match the residuals");
    }
    std::vector<std::vector<double>> series(smoother.cells().size());
    double loaded = -1.0;
    for (std::size_t c = 0; c < smoother.cells().size(); ++c) {
        const auto [k, l] = smoother.cells()[c];
        const double b = bw.at(k, l);
        if (b != loaded) {
            if (!smoother.load(b)) {
                throw DegenerateBandwidthError("kernel weights vanish; bandwidth too small for T");
            }
            loaded = b;
        }
        series[c] = smoother.smooth(c);
    }
    std::vector<const std::vector<double>*> refs;
    for (const auto& s : series) {
        refs.push_back(&s);
    }
    return assemble(smoother, refs);
}

SmoothedVolPath regularize(const std::vector<Matrix>& raw, double nu) {
    if (!(nu >= 0.0)) {
        throw InvalidArgument("regularize: nu must be nonnegative");
    }
    SmoothedVolPath path;
    path.nu = nu;
    path.sigmas.reserve(raw.size());
    for (const auto& m : raw) {
        path.sigmas.push_back(regularize_one(m, nu));
    }
    return path;
}

SmoothedVolPath smooth_volatility(const Matrix& residuals, const BandwidthSet& bw,
                                  KernelId kernel, double nu) {
    const auto raw = smooth_outer_products(residuals, bw, kernel);
    bool escalate = false;
    if (nu == 0.0) {
        escalate = std::any_of(raw.begin(), raw.end(), [](const Matrix& m) {
            return linalg::min_eigenvalue(m) < kEscalationEigenvalue;
        });
    }
    const double used = escalate ? 1e-8 / static_cast<double>(residuals.rows()) : nu;
    SmoothedVolPath path = regularize(raw, used);
    path.nu_escalated = escalate;
    path.bandwidths = bw;
    return path;
}

double cv_score(const Matrix& residuals, const BandwidthSet& bw, KernelId kernel, double nu) {
    return score_path(smooth_outer_products(residuals, bw, kernel), residuals, nu);
}

std::vector<double> log_grid(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi >= lo) || points < 1) {
        throw InvalidArgument("log_grid: need 0 < lo <= hi and points >= 1");
    }
    std::vector<double> out(static_cast<std::size_t>(points));
    if (points == 1) {
        out[0] = lo;
        return out;
    }
    const double step = std::log(hi / lo) / (points - 1);
    for (int i = 0; i < points; ++i) {
        out[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
    }
    out.back() = hi;
    return out;
}

namespace {

/// Smoothed series for every (cell, grid point); invalid grid points are flagged.
struct SmoothingCache {
    std::vector<std::vector<std::vector<double>>> series;  // [grid][cell][t]
    std::vector<bool> valid;
};

SmoothingCache build_cache(CellSmoother& smoother, const std::vector<double>& grid) {
    SmoothingCache cache;
    cache.series.resize(grid.size());
    cache.valid.assign(grid.size(), false);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (!smoother.load(grid[g])) {
            continue;
        }
        cache.valid[g] = true;
        for (std::size_t c = 0; c < smoother.cells().size(); ++c) {
            cache.series[g].push_back(smoother.smooth(c));
        }
    }
    return cache;
}

double score_choice(const CellSmoother& smoother, const SmoothingCache& cache,
                    const std::vector<std::size_t>& choice, const Matrix& residuals, double nu) {
    std::vector<const std::vector<double>*> refs;
    for (std::size_t c = 0; c < choice.size(); ++c) {
        if (!cache.valid[choice[c]]) {
            return std::numeric_limits<double>::infinity();
        }
        refs.push_back(&cache.series[choice[c]][c]);
    }
    return score_path(assemble(smoother, refs), residuals, nu);
}

}  // namespace

CvTrace cv_trace(const Matrix& residuals, const std::vector<double>& grid, KernelId kernel,
                 double nu) {
    validate_grid(grid);
    CellSmoother smoother(residuals, kernel);
    const SmoothingCache cache = build_cache(smoother, grid);
    CvTrace trace{grid, std::vector<double>(grid.size())};
    const std::size_t cells = smoother.cells().size();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        trace.scores[g] = score_choice(smoother, cache, std::vector<std::size_t>(cells, g),
                                       residuals, nu);
    }
    return trace;
}

BandwidthSet select_bandwidths(const Matrix& residuals, const std::vector<double>& grid,
                               BandwidthMode mode, KernelId kernel, double nu) {
    validate_grid(grid);
    CellSmoother smoother(residuals, kernel);
    const SmoothingCache cache = build_cache(smoother, grid);
    const std::size_t cells = smoother.cells().size();

    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double s =
            score_choice(smoother, cache, std::vector<std::size_t>(cells, g), residuals, nu);
        if (s < best_score) {
            best_score = s;
            best = g;
        }
    }
    if (!std::isfinite(best_score)) {
        throw DegenerateBandwidthError("every candidate bandwidth is degenerate for this T");
    }
    const int d = smoother.d();
    if (mode == BandwidthMode::Single || cells == 1) {
        BandwidthSet out = BandwidthSet::single(d, grid[best]);
        return mode == BandwidthMode::Single ? out : BandwidthSet::per_cell(out.values());
    }

    std::vector<std::size_t> choice(cells, best);
    for (int cycle = 0; cycle < kMaxCoordinateCycles; ++cycle) {
        bool changed = false;
        for (std::size_t c = 0; c < cells; ++c) {
            std::size_t arg = choice[c];
            double arg_score = std::numeric_limits<double>::infinity();
            std::vector<std::size_t> trial = choice;
            for (std::size_t g = 0; g < grid.size(); ++g) {
                trial[c] = g;
                const double s = score_choice(smoother, cache, trial, residuals, nu);
                if (s < arg_score) {
                    arg_score = s;
                    arg = g;
                }
            }
            if (arg != choice[c]) {
                choice[c] = arg;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }
    }
    Matrix values(d, d);
    for (std::size_t c = 0; c < cells; ++c) {
        const auto [k, l] = smoother.cells()[c];
        values(k, l) = values(l, k) = grid[choice[c]];
    }
    return BandwidthSet::per_cell(values);
}

}  // namespace hetvar
