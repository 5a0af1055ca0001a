#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hetvar/asymcov.hpp"
#include "hetvar/causality.hpp"
#include "hetvar/cli.hpp"
#include "hetvar/error.hpp"
#include "hetvar/estimators.hpp"
#include "hetvar/model.hpp"
#include "hetvar/montecarlo.hpp"
#include "hetvar/simd/kernels.hpp"
#include "hetvar/volatility.hpp"

namespace hetvar::cli {

namespace {

using nlohmann::json;

struct AlsFlags {
    std::string kernel = "gaussian";
    std::string mode = "single";
    int grid_points = 50;
    double grid_lo = 0.01;
    double grid_hi = 0.5;
    double nu = 0.0;

    void attach(CLI::App& app) {
        app.add_option("--kernel", kernel, "gaussian | epanechnikov")->capture_default_str();
        app.add_option("--bandwidth-mode", mode, "single | per-cell")->capture_default_str();
        app.add_option("--grid-points", grid_points, "CV grid size")->capture_default_str();
        app.add_option("--grid-lo", grid_lo, "smallest bandwidth")->capture_default_str();
        app.add_option("--grid-hi", grid_hi, "largest bandwidth")->capture_default_str();
        app.add_option("--nu", nu, "regularization constant")->capture_default_str();
    }

    AlsOptions options(bool demean) const {
        AlsOptions o;
        o.kernel = kernel_from_string(kernel);
        o.mode = bandwidth_mode_from_string(mode);
        o.grid = log_grid(grid_lo, grid_hi, grid_points);
        o.nu = nu;
        o.demean = demean;
        return o;
    }
};

struct DataFlags {
    std::string path;
    int p = 1;
    bool difference = false;
    bool demean = false;

    void attach(CLI::App& app) {
        app.add_option("data", path, "input CSV")->required();
        app.add_option("--p", p, "lag order")->capture_default_str()->check(CLI::PositiveNumber);
        app.add_flag("--difference", difference, "fit on first differences");
        app.add_flag("--demean", demean, "subtract column means");
    }

    Sample load(std::vector<std::string>* names = nullptr) const {
        CsvTable table = read_csv_file(path);
        Matrix values = difference ? cli::difference(table.values) : table.values;
        if (names) {
            *names = table.names;
        }
        if (values.rows() <= p) {
            throw DataError("not enough rows for the lag order");
        }
        return Sample(std::move(values), p);
    }
};

std::string coefficient_label(std::size_t idx, int d) {
    const int dd = d * d;
    const int lag = static_cast<int>(idx) / dd + 1;
    const int col = (static_cast<int>(idx) % dd) / d + 1;
    const int row = static_cast<int>(idx) % d + 1;
    return "A" + std::to_string(lag) + "_r" + std::to_string(row) + "c" + std::to_string(col);
}

Vector standard_errors(const Matrix& cov, int T) {
    return (cov.diagonal().array().max(0.0) / T).sqrt();
}

/// NaN standard errors when the covariance cannot be formed (e.g. exact-fit data).
Vector guarded_standard_errors(const std::function<Matrix()>& cov, Eigen::Index n, int T) {
    try {
        return standard_errors(cov(), T);
    } catch (const SingularMatrixError&) {
    } catch (const NotPositiveDefiniteError&) {
    }
    return Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
}

std::optional<std::uint64_t> env_seed() {
    const char* raw = std::getenv("HETVAR_SEED");
    if (!raw || !*raw) {
        return std::nullopt;
    }
    try {
        std::size_t used = 0;
        const auto v = std::stoull(raw, &used, 0);
        if (raw[used] != '\0') {
            throw InvalidArgument("HETVAR_SEED is not an integer");
        }
        return v;
    } catch (const std::logic_error&) {
        throw InvalidArgument("HETVAR_SEED is not an integer");
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidArgument("'" + path + "': " + e.what());
    }
}

Matrix matrix_from_json(const json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) {
        throw InvalidArgument("empty matrix");
    }
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) {
            throw InvalidArgument("ragged matrix");
        }
        for (std::size_t k = 0; k < rows[i].size(); ++k) {
            m(i, k) = rows[i][k];
        }
    }
    return m;
}

VolatilitySpec volatility_from_json(const json& j, int d) {
    if (j.is_string()) {
        const mc::VolDesign design = mc::vol_design_from_string(j.get<std::string>());
        if (design == mc::VolDesign::Homo) {
            return VolatilitySpec::homoscedastic(d);
        }
        return mc::Design{.volatility = design}.vol();
    }
    const std::string type = j.at("type").get<std::string>();
    if (type == "constant") {
        return vol::Constant{j.contains("sigma") ? matrix_from_json(j.at("sigma"))
                                                 : Matrix::Identity(d, d)};
    }
    if (type == "step") {
        return vol::PiecewiseStep{j.at("base").get<std::vector<double>>(),
                                  j.at("shifted").get<std::vector<double>>(),
                                  j.at("breaks").get<std::vector<double>>()};
    }
    if (type == "linear_trend") {
        return vol::LinearTrend{j.value("rho", 0.6), j.value("gamma1", 20.0),
                                j.value("gamma2", j.value("gamma1", 20.0) / 3.0)};
    }
    if (type == "power_trend") {
        return vol::PowerTrend{j.at("start").get<std::vector<double>>(),
                               j.at("end").get<std::vector<double>>(), j.value("q", 1.0)};
    }
    throw InvalidArgument("unknown volatility type '" + type + "'");
}

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::string& out_path, std::ostream& out) {
    const json doc = read_json_file(config_path);
    std::optional<VarSpec> spec;
    std::optional<VolatilitySpec> vol;
    int T = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> names;
    try {
        if (doc.contains("coefficients")) {
            std::vector<Matrix> coeffs;
            for (const auto& a : doc.at("coefficients")) {
                coeffs.push_back(matrix_from_json(a));
            }
            spec.emplace(std::move(coeffs));
        } else {
            json wrapper = {{"design", doc.value("design", json::object())}};
            spec.emplace(mc::config_from_json(wrapper).design.spec());
            if (!doc.contains("volatility")) {
                vol.emplace(mc::config_from_json(wrapper).design.vol());
            }
        }
        if (doc.contains("volatility")) {
            vol.emplace(volatility_from_json(doc.at("volatility"), spec->d()));
        } else if (!vol) {
            vol.emplace(VolatilitySpec::homoscedastic(spec->d()));
        }
        T = doc.at("T").get<int>();
        seed = doc.value("seed", std::uint64_t{1});
        if (doc.contains("names")) {
            names = doc.at("names").get<std::vector<std::string>>();
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("simulate config: ") + e.what());
    }
    if (auto s = env_seed()) {
        seed = *s;
    }
    if (T < 1) {
        throw InvalidArgument("simulate config: T must be positive");
    }
    if (names.empty()) {
        for (int k = 1; k <= spec->d(); ++k) {
            names.push_back("x" + std::to_string(k));
        }
    }
    if (static_cast<int>(names.size()) != spec->d()) {
        throw InvalidArgument("simulate config: names must have one entry per series");
    }
    const Sample sample = simulate(*spec, *vol, T, seed);
    std::ofstream file(out_path);
    if (!file) {
        throw DataError("cannot write '" + out_path + "'");
    }
    write_csv(file, names, sample.data());
    out << "wrote " << sample.data().rows() << " rows (T = " << T << ", p = " << spec->p()
        << ", seed = " << seed << ") to " << out_path << '\n';
    return kOk;
}

int cmd_fit(const DataFlags& data, const std::string& method, const AlsFlags& als_flags,
            const std::string& cv_trace_path, const std::string& format, std::ostream& out) {
    const Sample raw = data.load();
    const int p = data.p;
    const Sample sample = prepare_sample(raw, p, data.demean);
    const Fit ols = ols_fit(sample, p);
    const CovEstimates cov = ols_cov_estimates(sample, ols, CovVariant::Residual);
    const int T = ols.T();
    const int d = ols.d;
    const Eigen::Index n = ols.theta.size();
    const Vector se_robust =
        guarded_standard_errors([&] { return sandwich(cov.lambda2, cov.lambda3); }, n, T);
    const Vector se_naive =
        guarded_standard_errors([&] { return linalg::inverse_symmetric(cov.j_hat); }, n, T);

    std::optional<Fit> als;
    Vector se_als;
    const AlsOptions options = als_flags.options(false);
    if (method == "als") {
        als = als_fit(sample, p, options);
        const Matrix l1 = weighted_lambda1(sample, p, als->vol_path->sigmas, als->theta,
                                           CovVariant::Residual);
        se_als = guarded_standard_errors([&] { return linalg::inverse_symmetric(l1); }, n, T);
    } else if (method != "ols") {
        throw InvalidArgument("--method must be ols or als");
    }
    if (!cv_trace_path.empty()) {
        const CvTrace trace = cv_trace(ols.residuals, options.grid, options.kernel, options.nu);
        std::ofstream file(cv_trace_path);
        if (!file) {
            throw DataError("cannot write '" + cv_trace_path + "'");
        }
        Matrix m(trace.grid.size(), 2);
        for (std::size_t i = 0; i < trace.grid.size(); ++i) {
            m(i, 0) = trace.grid[i];
            m(i, 1) = trace.scores[i];
        }
        write_csv(file, {"b", "cv"}, m);
    }

    std::vector<std::string> header{"coefficient", "ols", "se_ols_robust", "se_naive"};
    if (als) {
        header.insert(header.end(), {"als", "se_als"});
    }
    if (format == "csv") {
        for (std::size_t j = 0; j < header.size(); ++j) {
            out << (j ? "," : "") << header[j];
        }
        out << '\n';
        for (Eigen::Index i = 0; i < ols.theta.size(); ++i) {
            out << coefficient_label(i, d) << ',' << format_double(ols.theta(i)) << ','
                << format_double(se_robust(i)) << ',' << format_double(se_naive(i));
            if (als) {
                out << ',' << format_double(als->theta(i)) << ',' << format_double(se_als(i));
            }
            out << '\n';
        }
        return kOk;
    }

    out << "VAR(" << p << "), d = " << d << ", T = " << T << (data.difference ? ", differenced" : "")
        << (data.demean ? ", demeaned" : "") << '\n';
    if (als) {
        const BandwidthSet& bw = *als->bandwidths;
        out << "bandwidth (" << to_string(bw.mode()) << ", " << als_flags.kernel << "):";
        if (bw.mode() == BandwidthMode::Single) {
            out << " b = " << bw.at(0, 0);
        } else {
            for (int k = 0; k < d; ++k) {
                for (int l = k; l < d; ++l) {
                    out << " b" << k + 1 << l + 1 << " = " << bw.at(k, l);
                }
            }
        }
        if (als->vol_path->nu_escalated) {
            out << "  (nu raised to " << als->vol_path->nu << ")";
        }
        out << '\n';
    }
    out << std::left << std::setw(12) << header[0] << std::right;
    for (std::size_t j = 1; j < header.size(); ++j) {
        out << std::setw(15) << header[j];
    }
    out << '\n' << std::fixed << std::setprecision(6);
    for (Eigen::Index i = 0; i < ols.theta.size(); ++i) {
        out << std::left << std::setw(12) << coefficient_label(i, d) << std::right << std::setw(15)
            << ols.theta(i) << std::setw(15) << se_robust(i) << std::setw(15) << se_naive(i);
        if (als) {
            out << std::setw(15) << als->theta(i) << std::setw(15) << se_als(i);
        }
        out << '\n';
    }
    out.unsetf(std::ios::floatfield);
    return kOk;
}

std::vector<WaldMethod> parse_methods(const std::string& list) {
    if (list.empty() || list == "all") {
        return all_feasible_methods();
    }
    std::vector<WaldMethod> out;
    std::stringstream s(list);
    std::string item;
    while (std::getline(s, item, ',')) {
        if (!item.empty()) {
            out.push_back(wald_method_from_string(item));
        }
    }
    if (out.empty()) {
        throw InvalidArgument("--methods is empty");
    }
    return out;
}

int cmd_granger(const DataFlags& data, int d1, const std::string& methods_list, double alpha,
                const AlsFlags& als_flags, const std::string& format, std::ostream& out) {
    const Sample sample = data.load();
    if (sample.d() < 2) {
        throw DataError("causality tests need at least two series");
    }
    const auto methods = parse_methods(methods_list);
    for (WaldMethod m : methods) {
        if (m == WaldMethod::Gls || m == WaldMethod::GlsDelta || m == WaldMethod::GlsMax) {
            throw InvalidArgument("GLS tests need the true volatility and are not available here");
        }
    }
    GrangerOptions options;
    options.als = als_flags.options(false);
    options.demean = data.demean;
    if (auto s = env_seed()) {
        options.weighted_seed = *s;
    }
    const auto results = granger_tests(sample, data.p, d1, methods, options);

    if (format == "csv") {
        out << "test,statistic,df,p_value,reject,p_value_corrected\n";
        for (const auto& r : results) {
            out << to_string(r.method) << ',' << format_double(r.statistic) << ',' << r.df << ','
                << format_double(r.p_value) << ',' << (r.p_value < alpha ? 1 : 0) << ','
                << (r.corrected_p_value ? format_double(*r.corrected_p_value) : "") << '\n';
        }
        return kOk;
    }
    out << "H0: series " << d1 + 1 << ".." << sample.d() << " do not Granger cause series 1.." << d1
        << " (p = " << data.p << ", alpha = " << alpha << ")\n";
    out << std::left << std::setw(14) << "test" << std::right << std::setw(13) << "statistic"
        << std::setw(5) << "df" << std::setw(12) << "p-value" << std::setw(8) << "reject" << '\n';
    for (const auto& r : results) {
        out << std::left << std::setw(14) << to_string(r.method) << std::right << std::fixed
            << std::setprecision(4) << std::setw(13) << r.statistic << std::setw(5) << r.df
            << std::setw(12) << r.p_value << std::setw(8) << (r.p_value < alpha ? "yes" : "no")
            << '\n';
        out.unsetf(std::ios::floatfield);
        if (r.corrected_p_value) {
            out << "  kappa-corrected p-value " << std::fixed << std::setprecision(4)
                << *r.corrected_p_value << " (kappa =";
            for (Eigen::Index k = 0; k < r.kappas->size(); ++k) {
                out << ' ' << (*r.kappas)(k);
            }
            out << ")\n";
            out.unsetf(std::ios::floatfield);
        }
    }
    return kOk;
}

int cmd_mc(const std::string& kind, const std::string& config_path, const std::string& prefix,
           int jobs, int n_override, std::ostream& out) {
    const json doc = read_json_file(config_path);
    mc::ExperimentConfig config = mc::config_from_json(doc);
    if (auto s = env_seed()) {
        config.base_seed = *s;
    }
    if (jobs >= 0) {
        config.jobs = jobs;
    }
    if (n_override > 0) {
        config.N = n_override;
    }
    config.validate();

    const auto start = std::chrono::steady_clock::now();
    std::ostringstream csv;
    std::ostringstream text;
    if (kind == "size" || kind == "power") {
        const mc::RejectionTable table = kind == "size" ? mc::run_size(config) : mc::run_power(config);
        mc::write_csv(csv, table);
        mc::write_text(text, table);
    } else {
        const mc::RmseTable table = mc::run_rmse(config);
        mc::write_csv(csv, table);
        mc::write_text(text, table);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    out << text.str();
    if (!prefix.empty()) {
        const auto write = [](const std::string& path, const std::string& body) {
            std::ofstream f(path);
            if (!f) {
                throw DataError("cannot write '" + path + "'");
            }
            f << body;
        };
        write(prefix + ".csv", csv.str());
        write(prefix + ".txt", text.str());
        json manifest = {
            {"command", "mc-" + kind},
            {"config", mc::to_json(config)},
            {"base_seed", config.base_seed},
            {"wall_time_seconds", seconds},
            {"simd", std::string(simd::active_kernels().name)},
            {"outputs", {prefix + ".csv", prefix + ".txt"}},
        };
        write(prefix + ".json", manifest.dump(2) + "\n");
    }
    return kOk;
}

int cmd_cv_trace(const DataFlags& data, const AlsFlags& als_flags, const std::string& out_path,
                 std::ostream& out) {
    const Sample sample = prepare_sample(data.load(), data.p, data.demean);
    const Fit ols = ols_fit(sample, data.p);
    const AlsOptions options = als_flags.options(false);
    const CvTrace trace = cv_trace(ols.residuals, options.grid, options.kernel, options.nu);
    Matrix m(trace.grid.size(), 2);
    for (std::size_t i = 0; i < trace.grid.size(); ++i) {
        m(i, 0) = trace.grid[i];
        m(i, 1) = trace.scores[i];
    }
    if (out_path.empty() || out_path == "-") {
        write_csv(out, {"b", "cv"}, m);
    } else {
        std::ofstream file(out_path);
        if (!file) {
            throw DataError("cannot write '" + out_path + "'");
        }
        write_csv(file, {"b", "cv"}, m);
        const BandwidthSet bw = select_bandwidths(ols.residuals, options.grid, BandwidthMode::Single,
                                                  options.kernel, options.nu);
        out << "selected b = " << bw.at(0, 0) << '\n';
    }
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adaptive estimation and Granger-causality tests for VARs with time-varying variance"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "hetvar 1.0.0");

    std::string config_path;
    std::string out_path;
    auto* simulate_cmd = app.add_subcommand("simulate", "simulate a VAR path from a JSON config");
    simulate_cmd->add_option("config", config_path, "JSON config")->required();
    simulate_cmd->add_option("out", out_path, "output CSV")->required();

    DataFlags data;
    AlsFlags als;
    std::string method = "als";
    std::string cv_trace_path;
    std::string format = "text";
    auto* fit_cmd = app.add_subcommand("fit", "OLS/ALS fit with three standard-error sets");
    data.attach(*fit_cmd);
    als.attach(*fit_cmd);
    fit_cmd->add_option("--method", method, "ols | als")->capture_default_str();
    fit_cmd->add_option("--cv-trace", cv_trace_path, "write the CV curve to this CSV");
    fit_cmd->add_option("--format", format, "text | csv")->capture_default_str();

    int d1 = 1;
    std::string methods = "all";
    double alpha = 0.05;
    auto* granger_cmd = app.add_subcommand("granger", "Wald tests for Granger causality in mean");
    data.attach(*granger_cmd);
    als.attach(*granger_cmd);
    granger_cmd->add_option("--d1", d1, "size of the caused block")->capture_default_str();
    granger_cmd->add_option("--methods", methods, "comma list, e.g. S,OLS,ALS")
        ->capture_default_str();
    granger_cmd->add_option("--alpha", alpha, "nominal level")->capture_default_str();
    granger_cmd->add_option("--format", format, "text | csv")->capture_default_str();

    int jobs = -1;
    int n_override = 0;
    std::string prefix;
    std::vector<CLI::App*> mc_cmds;
    for (const char* kind : {"size", "power", "rmse"}) {
        auto* cmd = app.add_subcommand(std::string("mc-") + kind, std::string("Monte Carlo ") + kind);
        cmd->add_option("config", config_path, "JSON experiment config")->required();
        cmd->add_option("--out", prefix, "write PREFIX.csv, PREFIX.txt and PREFIX.json");
        cmd->add_option("--jobs", jobs, "worker threads (0 = all cores)");
        cmd->add_option("--N", n_override, "override the replication count");
        mc_cmds.push_back(cmd);
    }

    auto* cv_cmd = app.add_subcommand("cv-trace", "cross-validation curve on the OLS residuals");
    data.attach(*cv_cmd);
    als.attach(*cv_cmd);
    cv_cmd->add_option("--out", out_path, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (simulate_cmd->parsed()) {
            return cmd_simulate(config_path, out_path, out);
        }
        if (fit_cmd->parsed()) {
            return cmd_fit(data, method, als, cv_trace_path, format, out);
        }
        if (granger_cmd->parsed()) {
            return cmd_granger(data, d1, methods, alpha, als, format, out);
        }
        for (std::size_t i = 0; i < mc_cmds.size(); ++i) {
            if (mc_cmds[i]->parsed()) {
                static const char* kinds[] = {"size", "power", "rmse"};
                return cmd_mc(kinds[i], config_path, prefix, jobs, n_override, out);
            }
        }
        if (cv_cmd->parsed()) {
            return cmd_cv_trace(data, als, out_path, out);
        }
    } catch (const DataError& e) {
        err << "hetvar: data error: " << e.what() << '\n';
        return kData;
    } catch (const InvalidArgument& e) {
        err << "hetvar: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        err << "hetvar: numerical error: " << e.what() << '\n';
        return kNumerical;
    }
    return kUsage;
}

}  // namespace hetvar::cli
