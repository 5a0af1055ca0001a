#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetvar/causality.hpp"
#include "hetvar/estimators.hpp"
#include "hetvar/model.hpp"
#include "hetvar/volatility.hpp"

namespace hetvar::mc {

enum class VolDesign { Homo, LinearTrend };

std::string to_string(VolDesign design);
VolDesign vol_design_from_string(const std::string& name);

/// Bivariate VAR(1) with A₁ = [[a11, a12], [a21, a22]] and either iid N(0, I₂)
/// innovations or the trending LinearTrend(ρ, γ₁, γ₂) volatility.
struct Design {
    double a11 = 0.2;
    double a12 = 0.0;
    double a21 = 0.1;
    double a22 = 0.2;
    VolDesign volatility = VolDesign::Homo;
    double rho = 0.6;
    double gamma1 = 20.0;
    double gamma2 = 20.0 / 3.0;

    VarSpec spec() const;
    VolatilitySpec vol() const;
};

inline constexpr int kExperimentGridPoints = 20;

struct ExperimentConfig {
    Design design;
    std::vector<int> T{100, 200, 400};
    int N = 1000;
    std::vector<WaldMethod> tests = all_feasible_methods();
    double alpha = 0.05;
    std::uint64_t base_seed = 20100101;
    AlsOptions als = [] {
        AlsOptions o;
        o.grid = log_grid(0.01, 0.5, kExperimentGridPoints);
        return o;
    }();
    /// Adds the infeasible GLS rows (true Σ(t/T) path).
    bool gls_oracle = true;
    /// Power: a₁₂ values on the column axis (T = T.front()).
    std::vector<double> a12_values;
    /// RMSE: a₁₁ = a₂₂ values (T = T.front()).
    std::vector<double> sweep;
    /// Worker threads; 0 means hardware concurrency. Results do not depend on it.
    int jobs = 0;

    /// Requested tests plus the GLS family when gls_oracle is set, without duplicates.
    std::vector<WaldMethod> effective_tests() const;
    void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& config);

/// Counter-based stream seed for replication r.
std::uint64_t replication_seed(std::uint64_t base_seed, std::uint64_t r);

struct RejectionTable {
    std::vector<std::string> rows;
    std::string column_name;
    std::vector<double> columns;
    /// rows × columns, in percent of the successful replications.
    Matrix entries;
    /// Replications whose test raised a numerical error (excluded from the rate).
    Eigen::MatrixXi failures;
    int N = 0;
    double alpha = 0.05;
    /// Binomial 95% band of the nominal level, in percent.
    double band_lo = 0.0;
    double band_hi = 0.0;

    double at(WaldMethod method, double column) const;
};

/// α ± 1.96·√(α(1−α)/N), in percent.
std::pair<double, double> binomial_band(double alpha, int N);

RejectionTable run_size(const ExperimentConfig& config);
RejectionTable run_power(const ExperimentConfig& config);

inline constexpr int kEstimatorCount = 3;
enum class Estimator { Ols = 0, Als = 1, Gls = 2 };
std::string to_string(Estimator e);
/// θ order: a11, a21, a12, a22.
std::string coefficient_name(int k);

struct RmsePoint {
    double a = 0.0;
    /// [estimator][coefficient] → squared error per replication (N entries; NaN on failure).
    std::vector<std::vector<std::vector<double>>> sq_errors;

    double rmse(Estimator e, int k) const;
    /// Delta-method standard error of RMSE(a) − RMSE(b) from paired replications.
    double difference_se(Estimator a, Estimator b, int k) const;
    int failures() const;
};

struct RmseTable {
    int T = 0;
    int N = 0;
    std::vector<RmsePoint> points;
};

RmseTable run_rmse(const ExperimentConfig& config);

void write_csv(std::ostream& out, const RejectionTable& table);
void write_text(std::ostream& out, const RejectionTable& table);
void write_csv(std::ostream& out, const RmseTable& table);
void write_text(std::ostream& out, const RmseTable& table);

/// Runs f(0..n-1) on `jobs` threads; f writes only into its own slot.
void parallel_for(int n, int jobs, const std::function<void(int)>& f);

}  // namespace hetvar::mc
