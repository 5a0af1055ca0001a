#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "hetvar/error.hpp"
#include "hetvar/montecarlo.hpp"

using namespace hetvar;
using namespace hetvar::mc;

namespace {

ExperimentConfig small(VolDesign v, std::vector<int> T, int N) {
    ExperimentConfig c;
    c.design.volatility = v;
    c.T = std::move(T);
    c.N = N;
    c.jobs = 1;
    return c;
}

}  // namespace

TEST(Seeds, DistinctAndStable) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t r = 0; r < 5000; ++r) {
        seen.insert(replication_seed(20100101, r));
    }
    EXPECT_EQ(seen.size(), 5000U);
    EXPECT_EQ(replication_seed(1, 7), replication_seed(1, 7));
    EXPECT_NE(replication_seed(1, 7), replication_seed(2, 7));
    // nearby bases must not permute the same stream set
    std::set<std::uint64_t> other;
    for (std::uint64_t r = 0; r < 5000; ++r) {
        other.insert(replication_seed(20100102, r));
    }
    std::vector<std::uint64_t> common;
    std::set_intersection(seen.begin(), seen.end(), other.begin(), other.end(), std::back_inserter(common));
    EXPECT_TRUE(common.empty());
}

TEST(Band, Values) {
    const auto [lo, hi] = binomial_band(0.05, 1000);
    EXPECT_NEAR(lo, 3.65, 0.005);
    EXPECT_NEAR(hi, 6.35, 0.005);
}

TEST(ParallelFor, CoversEverySlotOnce) {
    for (int jobs : {1, 2, 5}) {
        std::vector<int> hits(37, 0);
        parallel_for(37, jobs, [&](int i) { ++hits[i]; });
        EXPECT_EQ(hits, std::vector<int>(37, 1));
    }
    EXPECT_THROW(parallel_for(10, 3, [](int i) {
                     if (i == 4) throw SingularMatrixError("boom");
                 }),
                 SingularMatrixError);
}

TEST(Config, JsonRoundTrip) {
    ExperimentConfig c = small(VolDesign::LinearTrend, {50, 80}, 12);
    c.tests = {WaldMethod::Standard, WaldMethod::AlsMax};
    c.alpha = 0.1;
    c.base_seed = 99;
    c.a12_values = {0.2, -0.4};
    c.sweep = {0.0, 0.3};
    c.gls_oracle = false;
    c.als.kernel = KernelId::Epanechnikov;
    c.als.mode = BandwidthMode::PerCell;
    const ExperimentConfig back = config_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_EQ(back.T, c.T);
    EXPECT_EQ(back.tests, c.tests);
    EXPECT_EQ(back.als.grid, c.als.grid);
    EXPECT_EQ(back.design.volatility, VolDesign::LinearTrend);
}

TEST(Config, Validation) {
    ExperimentConfig c = small(VolDesign::Homo, {100}, 10);
    c.design.a12 = 0.3;
    EXPECT_THROW(run_size(c), InvalidArgument);
    c.design.a12 = 0.0;
    c.T = {7};
    EXPECT_THROW(c.validate(), InvalidArgument);
    c.T = {100};
    c.N = 0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c.N = 10;
    EXPECT_THROW(run_power(c), InvalidArgument);  // no a12 values
    c.a12_values = {0.0};
    EXPECT_THROW(run_power(c), InvalidArgument);
    c.a12_values = {20.0};
    EXPECT_THROW(run_power(c), InstabilityError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"design":{"volatility":"weird"}})")),
                 InvalidArgument);
}

TEST(Size, BitReproducibleAcrossThreadCounts) {
    ExperimentConfig c = small(VolDesign::LinearTrend, {60, 90}, 24);
    const RejectionTable a = run_size(c);
    c.jobs = 3;
    const RejectionTable b = run_size(c);
    EXPECT_EQ(a.entries, b.entries);
    EXPECT_EQ(a.failures, b.failures);
    std::ostringstream sa, sb;
    write_csv(sa, a);
    write_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(sa.str().substr(0, sa.str().find('\n')), "test,T=60,T=90");
}

TEST(Size, AlphaOneRejectsEverything) {
    ExperimentConfig c = small(VolDesign::Homo, {60}, 15);
    c.alpha = 1.0;
    const RejectionTable t = run_size(c);
    for (Eigen::Index i = 0; i < t.entries.rows(); ++i) {
        EXPECT_EQ(t.entries(i, 0), 100.0) << t.rows[i];
    }
}

TEST(Size, RowsFollowEffectiveTests) {
    ExperimentConfig c = small(VolDesign::Homo, {60}, 5);
    c.tests = {WaldMethod::Ols, WaldMethod::Gls};
    const auto eff = c.effective_tests();
    EXPECT_EQ(eff.size(), 4U);
    const RejectionTable t = run_size(c);
    ASSERT_EQ(t.rows.size(), eff.size());
    for (std::size_t i = 0; i < eff.size(); ++i) {
        EXPECT_EQ(t.rows[i], to_string(eff[i]));
    }
    EXPECT_GE(t.at(WaldMethod::Ols, 60), 0.0);
    EXPECT_THROW(t.at(WaldMethod::Als, 60), InvalidArgument);
}

TEST(Size, HomoscedasticWithinBand) {
    ExperimentConfig c = small(VolDesign::Homo, {200, 400}, 1000);
    c.jobs = 0;
    c.gls_oracle = false;
    const RejectionTable t = run_size(c);
    // seven tests per column: Bonferroni-adjusted binomial band, z = 2.69
    const double half = 2.69 * 100.0 * std::sqrt(0.05 * 0.95 / 1000);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (Eigen::Index j = 0; j < 2; ++j) {
            EXPECT_NEAR(t.entries(i, j), 5.0, half) << t.rows[i] << " T=" << t.columns[j];
            EXPECT_EQ(t.failures(i, j), 0);
        }
    }
}

TEST(Power, GrowsWithCoefficient) {
    ExperimentConfig c = small(VolDesign::Homo, {100}, 300);
    c.tests = {WaldMethod::Ols};
    c.gls_oracle = false;
    c.a12_values = {0.1, 0.3, 0.6};
    const RejectionTable t = run_power(c);
    EXPECT_EQ(t.column_name, "a12");
    EXPECT_LT(t.entries(0, 0), t.entries(0, 1));
    EXPECT_LT(t.entries(0, 1), t.entries(0, 2));
    EXPECT_GT(t.entries(0, 2), 90.0);
}

TEST(Power, NearlySymmetricInSign) {
    ExperimentConfig c = small(VolDesign::Homo, {100}, 400);
    c.tests = {WaldMethod::Ols};
    c.gls_oracle = false;
    c.a12_values = {-0.3, 0.3};
    const RejectionTable t = run_power(c);
    // 4 binomial standard errors at p ≈ 0.5
    EXPECT_NEAR(t.entries(0, 0), t.entries(0, 1), 4 * 100.0 * std::sqrt(0.5 / 400));
}

TEST(Rmse, HomoscedasticGlsEqualsOls) {
    ExperimentConfig c = small(VolDesign::Homo, {80}, 20);
    c.sweep = {0.0, 0.4};
    const RmseTable t = run_rmse(c);
    ASSERT_EQ(t.points.size(), 2U);
    for (const auto& pt : t.points) {
        EXPECT_EQ(pt.failures(), 0);
        for (int k = 0; k < 4; ++k) {
            for (int r = 0; r < 20; ++r) {
                EXPECT_NEAR(pt.sq_errors[2][k][r], pt.sq_errors[0][k][r], 1e-12);
            }
        }
    }
    std::ostringstream out;
    write_csv(out, t);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "a11_a22,coefficient,OLS,ALS,GLS");
}

TEST(Rmse, DifferenceStandardErrorOracle) {
    RmsePoint pt;
    pt.sq_errors.assign(3, std::vector<std::vector<double>>(4, std::vector<double>{1.0, 4.0, 9.0, 16.0}));
    pt.sq_errors[1][0] = {1.0, 1.0, 1.0, 1.0};
    EXPECT_NEAR(pt.rmse(Estimator::Ols, 0), std::sqrt(7.5), 1e-14);
    EXPECT_EQ(pt.difference_se(Estimator::Ols, Estimator::Gls, 0), 0.0);
    // diffs 0,3,8,15: sd/√n over the sum of the RMSEs
    const double mean = 6.5;
    double ss = 0.0;
    for (double x : {0.0, 3.0, 8.0, 15.0}) ss += (x - mean) * (x - mean);
    const double want = std::sqrt(ss / 3.0) / 2.0 / (std::sqrt(7.5) + 1.0);
    EXPECT_NEAR(pt.difference_se(Estimator::Ols, Estimator::Als, 0), want, 1e-14);
}

TEST(Rmse, HeteroscedasticOrdering) {
    ExperimentConfig c = small(VolDesign::LinearTrend, {100}, 300);
    c.jobs = 0;
    c.sweep = {0.2};
    const RmseTable t = run_rmse(c);
    const auto& pt = t.points[0];
    for (int k = 0; k < 4; ++k) {
        EXPECT_LT(pt.rmse(Estimator::Gls, k), pt.rmse(Estimator::Ols, k)) << coefficient_name(k);
    }
    std::ostringstream text;
    write_text(text, t);
    EXPECT_NE(text.str().find("a12"), std::string::npos);
}
