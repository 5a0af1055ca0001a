#include "hetvar/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "hetvar/error.hpp"

namespace hetvar::mc {

std::string to_string(VolDesign design) {
    return design == VolDesign::Homo ? "homo" : "linear_trend";
}

VolDesign vol_design_from_string(const std::string& name) {
    if (name == "homo" || name == "constant") {
        return VolDesign::Homo;
    }
    if (name == "linear_trend" || name == "hetero") {
        return VolDesign::LinearTrend;
    }
    throw InvalidArgument("unknown volatility design '" + name + "'");
}

VarSpec Design::spec() const {
    Matrix a(2, 2);
    a << a11, a12, a21, a22;
    return VarSpec({a});
}

VolatilitySpec Design::vol() const {
    if (volatility == VolDesign::Homo) {
        return VolatilitySpec::homoscedastic(2);
    }
    return VolatilitySpec(vol::LinearTrend{rho, gamma1, gamma2});
}

std::vector<WaldMethod> ExperimentConfig::effective_tests() const {
    std::vector<WaldMethod> out;
    auto add = [&](WaldMethod m) {
        if (std::find(out.begin(), out.end(), m) == out.end()) {
            out.push_back(m);
        }
    };
    for (WaldMethod m : tests) {
        add(m);
    }
    if (gls_oracle) {
        add(WaldMethod::Gls);
        add(WaldMethod::GlsDelta);
        add(WaldMethod::GlsMax);
    }
    return out;
}

void ExperimentConfig::validate() const {
    if (N < 1) {
        throw InvalidArgument("config: N must be at least 1");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw InvalidArgument("config: alpha must lie in (0, 1]");
    }
    if (T.empty()) {
        throw InvalidArgument("config: T list is empty");
    }
    for (int t : T) {
        if (t <= 2 + 5) {
            throw InvalidArgument("config: every T must exceed p*d + 5");
        }
    }
    if (effective_tests().empty()) {
        throw InvalidArgument("config: no tests requested");
    }
    if (als.grid.empty()) {
        throw InvalidArgument("config: ALS grid is empty");
    }
    if (jobs < 0) {
        throw InvalidArgument("config: jobs must be non-negative");
    }
}

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& doc) {
    try {
        ExperimentConfig c;
        if (doc.contains("design")) {
            const auto& d = doc.at("design");
            c.design.a11 = get_or(d, "a11", c.design.a11);
            c.design.a12 = get_or(d, "a12", c.design.a12);
            c.design.a21 = get_or(d, "a21", c.design.a21);
            c.design.a22 = get_or(d, "a22", c.design.a22);
            c.design.rho = get_or(d, "rho", c.design.rho);
            c.design.gamma1 = get_or(d, "gamma1", c.design.gamma1);
            c.design.gamma2 = get_or(d, "gamma2", c.design.gamma1 / 3.0);
            if (d.contains("volatility")) {
                c.design.volatility = vol_design_from_string(d.at("volatility").get<std::string>());
            }
        }
        c.T = get_or(doc, "T", c.T);
        c.N = get_or(doc, "N", c.N);
        c.alpha = get_or(doc, "alpha", c.alpha);
        c.base_seed = get_or(doc, "base_seed", c.base_seed);
        c.gls_oracle = get_or(doc, "gls_oracle", c.gls_oracle);
        c.a12_values = get_or(doc, "a12_values", c.a12_values);
        c.sweep = get_or(doc, "sweep", c.sweep);
        c.jobs = get_or(doc, "jobs", c.jobs);
        if (doc.contains("tests")) {
            c.tests.clear();
            for (const auto& name : doc.at("tests")) {
                c.tests.push_back(wald_method_from_string(name.get<std::string>()));
            }
        }
        if (doc.contains("als")) {
            const auto& a = doc.at("als");
            if (a.contains("kernel")) {
                c.als.kernel = kernel_from_string(a.at("kernel").get<std::string>());
            }
            if (a.contains("mode")) {
                c.als.mode = bandwidth_mode_from_string(a.at("mode").get<std::string>());
            }
            c.als.nu = get_or(a, "nu", c.als.nu);
            if (a.contains("grid")) {
                c.als.grid = a.at("grid").get<std::vector<double>>();
            } else if (a.contains("grid_points") || a.contains("grid_lo") || a.contains("grid_hi")) {
                c.als.grid = log_grid(get_or(a, "grid_lo", 0.01), get_or(a, "grid_hi", 0.5),
                                      get_or(a, "grid_points", kExperimentGridPoints));
            }
        }
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
}

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json tests = nlohmann::json::array();
    for (WaldMethod m : c.tests) {
        tests.push_back(to_string(m));
    }
    return {
        {"design",
         {{"a11", c.design.a11},
          {"a12", c.design.a12},
          {"a21", c.design.a21},
          {"a22", c.design.a22},
          {"volatility", to_string(c.design.volatility)},
          {"rho", c.design.rho},
          {"gamma1", c.design.gamma1},
          {"gamma2", c.design.gamma2}}},
        {"T", c.T},
        {"N", c.N},
        {"tests", tests},
        {"alpha", c.alpha},
        {"base_seed", c.base_seed},
        {"als",
         {{"kernel", to_string(c.als.kernel)},
          {"mode", to_string(c.als.mode)},
          {"nu", c.als.nu},
          {"grid", c.als.grid}}},
        {"gls_oracle", c.gls_oracle},
        {"a12_values", c.a12_values},
        {"sweep", c.sweep},
        {"jobs", c.jobs},
    };
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t replication_seed(std::uint64_t base_seed, std::uint64_t r) {
    return splitmix64(splitmix64(base_seed) ^ r);
}

void parallel_for(int n, int jobs, const std::function<void(int)>& f) {
    if (jobs <= 0) {
        jobs = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    }
    jobs = std::min(jobs, std::max(n, 1));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) {
            f(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                    next = n;
                }
            }
        });
    }
    for (auto& t : workers) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

std::pair<double, double> binomial_band(double alpha, int N) {
    const double half = 1.96 * std::sqrt(alpha * (1.0 - alpha) / N);
    return {100.0 * std::max(0.0, alpha - half), 100.0 * std::min(1.0, alpha + half)};
}

double RejectionTable::at(WaldMethod method, double column) const {
    const auto row = std::find(rows.begin(), rows.end(), to_string(method));
    const auto col = std::find_if(columns.begin(), columns.end(),
                                  [&](double c) { return std::abs(c - column) < 1e-12; });
    if (row == rows.end() || col == columns.end()) {
        throw InvalidArgument("RejectionTable::at: no such entry");
    }
    return entries(row - rows.begin(), col - columns.begin());
}

namespace {

constexpr std::int8_t kFailed = -1;

/// Outcome per test for one replication: 1 reject, 0 accept, -1 numerical failure.
void run_replication(const Sample& sample, const std::vector<WaldMethod>& tests,
                     const GrangerOptions& options, double alpha, std::int8_t* out) {
    const auto record = [&](std::size_t m, const WaldResult& res) {
        out[m] = res.p_value < alpha ? 1 : 0;
    };
    try {
        const auto results = granger_tests(sample, 1, 1, tests, options);
        for (std::size_t m = 0; m < tests.size(); ++m) {
            record(m, results[m]);
        }
        return;
    } catch (const InvalidArgument&) {
        throw;
    } catch (const Error&) {
    }
    for (std::size_t m = 0; m < tests.size(); ++m) {
        try {
            record(m, granger_test(sample, 1, 1, tests[m], options));
        } catch (const InvalidArgument&) {
            throw;
        } catch (const Error&) {
            out[m] = kFailed;
        }
    }
}

/// One column of a rejection table.
void fill_column(const ExperimentConfig& config, const Design& design, int T,
                 const std::vector<WaldMethod>& tests, RejectionTable& table, int col) {
    const VarSpec spec = design.spec();
    if (!is_stable(spec)) {
        throw InstabilityError("design is not stable");
    }
    const VolatilitySpec vol = design.vol();
    GrangerOptions options;
    options.als = config.als;
    options.true_volatility = vol;
    options.corrected_standard = false;

    const std::size_t n_tests = tests.size();
    std::vector<std::int8_t> outcomes(static_cast<std::size_t>(config.N) * n_tests, 0);
    parallel_for(config.N, config.jobs, [&](int r) {
        const Sample sample =
            simulate(spec, vol, T, replication_seed(config.base_seed, static_cast<std::uint64_t>(r)));
        run_replication(sample, tests, options, config.alpha, &outcomes[r * n_tests]);
    });

    for (std::size_t m = 0; m < n_tests; ++m) {
        int rejections = 0;
        int failures = 0;
        for (int r = 0; r < config.N; ++r) {
            const std::int8_t o = outcomes[r * n_tests + m];
            rejections += o == 1;
            failures += o == kFailed;
        }
        const int valid = config.N - failures;
        table.entries(m, col) =
            valid > 0 ? 100.0 * rejections / valid : std::numeric_limits<double>::quiet_NaN();
        table.failures(m, col) = failures;
    }
}

RejectionTable empty_table(const ExperimentConfig& config, const std::vector<WaldMethod>& tests,
                           std::string column_name, std::vector<double> columns) {
    RejectionTable table;
    for (WaldMethod m : tests) {
        table.rows.push_back(to_string(m));
    }
    table.column_name = std::move(column_name);
    table.columns = std::move(columns);
    table.entries = Matrix::Zero(tests.size(), table.columns.size());
    table.failures = Eigen::MatrixXi::Zero(tests.size(), table.columns.size());
    table.N = config.N;
    table.alpha = config.alpha;
    std::tie(table.band_lo, table.band_hi) = binomial_band(config.alpha, config.N);
    return table;
}

}  // namespace

RejectionTable run_size(const ExperimentConfig& config) {
    config.validate();
    if (config.design.a12 != 0.0) {
        throw InvalidArgument("run_size: the design must have a12 = 0");
    }
    const auto tests = config.effective_tests();
    std::vector<double> columns(config.T.begin(), config.T.end());
    RejectionTable table = empty_table(config, tests, "T", columns);
    for (std::size_t c = 0; c < config.T.size(); ++c) {
        fill_column(config, config.design, config.T[c], tests, table, static_cast<int>(c));
    }
    return table;
}

RejectionTable run_power(const ExperimentConfig& config) {
    config.validate();
    if (config.a12_values.empty()) {
        throw InvalidArgument("run_power: a12_values is empty");
    }
    const auto tests = config.effective_tests();
    RejectionTable table = empty_table(config, tests, "a12", config.a12_values);
    for (std::size_t c = 0; c < config.a12_values.size(); ++c) {
        if (config.a12_values[c] == 0.0) {
            throw InvalidArgument("run_power: a12 = 0 is a size experiment");
        }
        Design design = config.design;
        design.a12 = config.a12_values[c];
        fill_column(config, design, config.T.front(), tests, table, static_cast<int>(c));
    }
    return table;
}

std::string to_string(Estimator e) {
    switch (e) {
        case Estimator::Ols:
            return "OLS";
        case Estimator::Als:
            return "ALS";
        case Estimator::Gls:
            return "GLS";
    }
    return "?";
}

std::string coefficient_name(int k) {
    static const char* names[] = {"a11", "a21", "a12", "a22"};
    if (k < 0 || k > 3) {
        throw InvalidArgument("coefficient_name: index out of range");
    }
    return names[k];
}

namespace {

struct PairMoments {
    double mean_a = 0.0;
    double mean_b = 0.0;
    double var_diff = 0.0;
    int n = 0;
};

PairMoments pair_moments(const std::vector<double>& a, const std::vector<double>& b) {
    PairMoments m;
    for (std::size_t r = 0; r < a.size(); ++r) {
        if (std::isfinite(a[r]) && std::isfinite(b[r])) {
            m.mean_a += a[r];
            m.mean_b += b[r];
            ++m.n;
        }
    }
    if (m.n == 0) {
        return m;
    }
    m.mean_a /= m.n;
    m.mean_b /= m.n;
    const double mean_d = m.mean_a - m.mean_b;
    for (std::size_t r = 0; r < a.size(); ++r) {
        if (std::isfinite(a[r]) && std::isfinite(b[r])) {
            const double dev = a[r] - b[r] - mean_d;
            m.var_diff += dev * dev;
        }
    }
    m.var_diff /= std::max(1, m.n - 1);
    return m;
}

}  // namespace

double RmsePoint::rmse(Estimator e, int k) const {
    const auto& v = sq_errors.at(static_cast<int>(e)).at(k);
    double sum = 0.0;
    int n = 0;
    for (double x : v) {
        if (std::isfinite(x)) {
            sum += x;
            ++n;
        }
    }
    return n > 0 ? std::sqrt(sum / n) : std::numeric_limits<double>::quiet_NaN();
}

double RmsePoint::difference_se(Estimator a, Estimator b, int k) const {
    const PairMoments m = pair_moments(sq_errors.at(static_cast<int>(a)).at(k),
                                       sq_errors.at(static_cast<int>(b)).at(k));
    if (m.n == 0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    // d√x ≈ dx / (2√x) applied to the difference of mean squared errors
    const double se_mse = std::sqrt(m.var_diff / m.n);
    const double denom = std::sqrt(m.mean_a) + std::sqrt(m.mean_b);
    return denom > 0.0 ? se_mse / denom : 0.0;
}

int RmsePoint::failures() const {
    int out = 0;
    for (const auto& est : sq_errors) {
        for (double x : est.front()) {
            out += !std::isfinite(x);
        }
    }
    return out;
}

RmseTable run_rmse(const ExperimentConfig& config) {
    config.validate();
    if (config.sweep.empty()) {
        throw InvalidArgument("run_rmse: sweep is empty");
    }
    const int T = config.T.front();
    RmseTable table;
    table.T = T;
    table.N = config.N;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double a : config.sweep) {
        Design design = config.design;
        design.a11 = a;
        design.a22 = a;
        const VarSpec spec = design.spec();
        if (!is_stable(spec)) {
            throw InstabilityError("run_rmse: sweep point is not stable");
        }
        const VolatilitySpec vol = design.vol();
        const std::vector<Matrix> path = volatility_path(vol, T);
        const Vector theta0 = spec.theta();

        RmsePoint point;
        point.a = a;
        point.sq_errors.assign(kEstimatorCount,
                               std::vector<std::vector<double>>(4, std::vector<double>(config.N, nan)));
        parallel_for(config.N, config.jobs, [&](int r) {
            const Sample sample =
                simulate(spec, vol, T, replication_seed(config.base_seed, static_cast<std::uint64_t>(r)));
            const auto store = [&](Estimator e, const auto& fit_fn) {
                try {
                    const Vector err = fit_fn().theta - theta0;
                    for (int k = 0; k < 4; ++k) {
                        point.sq_errors[static_cast<int>(e)][k][r] = err(k) * err(k);
                    }
                } catch (const InvalidArgument&) {
                    throw;
                } catch (const Error&) {
                }
            };
            store(Estimator::Ols, [&] { return ols_fit(sample, 1); });
            store(Estimator::Als, [&] { return als_fit(sample, 1, config.als); });
            store(Estimator::Gls, [&] { return gls_fit(sample, 1, path); });
        });
        table.points.push_back(std::move(point));
    }
    return table;
}

namespace {

std::string format_number(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

}  // namespace

void write_csv(std::ostream& out, const RejectionTable& table) {
    out << "test";
    for (double c : table.columns) {
        out << ',' << table.column_name << '=' << format_number(c);
    }
    out << '\n';
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        out << table.rows[i];
        for (Eigen::Index j = 0; j < table.entries.cols(); ++j) {
            out << ',' << format_number(table.entries(i, j));
        }
        out << '\n';
    }
}

void write_text(std::ostream& out, const RejectionTable& table) {
    // size tables only: power rates are not compared with the nominal level
    const bool mark = table.column_name == "T";
    out << std::left << std::setw(14) << table.column_name;
    for (double c : table.columns) {
        out << std::right << std::setw(9) << c;
    }
    out << '\n';
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        out << std::left << std::setw(14) << table.rows[i];
        for (Eigen::Index j = 0; j < table.entries.cols(); ++j) {
            const double v = table.entries(i, j);
            const bool outside = mark && (v < table.band_lo || v > table.band_hi);
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(1) << v << (outside ? "*" : " ");
            out << std::right << std::setw(9) << cell.str();
        }
        out << '\n';
    }
    out << std::fixed << std::setprecision(2) << "N = " << table.N << ", alpha = " << table.alpha;
    if (mark) {
        out << ", * outside [" << table.band_lo << ", " << table.band_hi << "]";
    }
    out << '\n';
    out.unsetf(std::ios::floatfield);
}

void write_csv(std::ostream& out, const RmseTable& table) {
    out << "a11_a22,coefficient,OLS,ALS,GLS\n";
    for (const auto& point : table.points) {
        for (int k = 0; k < 4; ++k) {
            out << format_number(point.a) << ',' << coefficient_name(k);
            for (int e = 0; e < kEstimatorCount; ++e) {
                out << ',' << format_number(point.rmse(static_cast<Estimator>(e), k));
            }
            out << '\n';
        }
    }
}

void write_text(std::ostream& out, const RmseTable& table) {
    out << "RMSE x 100, T = " << table.T << ", N = " << table.N << '\n';
    out << std::left << std::setw(9) << "a" << std::setw(7) << "coef" << std::right
        << std::setw(9) << "OLS" << std::setw(9) << "ALS" << std::setw(9) << "GLS" << '\n';
    for (const auto& point : table.points) {
        for (int k = 0; k < 4; ++k) {
            out << std::left << std::setw(9) << point.a << std::setw(7) << coefficient_name(k)
                << std::right << std::fixed << std::setprecision(3);
            for (int e = 0; e < kEstimatorCount; ++e) {
                out << std::setw(9) << 100.0 * point.rmse(static_cast<Estimator>(e), k);
            }
            out.unsetf(std::ios::floatfield);
            out << '\n';
        }
    }
}

}  // namespace hetvar::mc
