#include "support.hpp"
#include "texec/calibration.hpp"
#include "texec/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace texec;
using namespace texec::testing;

namespace {

// VOD-shaped kernel rescaled so that G0(1) = 1; the impact fit then targets theta itself.
PropagatorKernel<double> unit_kernel() {
    return PropagatorKernel<double>::parametric(std::pow(17.0, 0.0375), 4.0, 0.075);
}

MarketSpec synthetic(double theta, double sigma, int per_day, int days, std::uint64_t seed = 1) {
    MarketSpec spec;
    spec.theta_bp = theta;
    spec.kernel = unit_kernel();
    spec.sigma_bp = sigma;
    spec.intervals_per_day = per_day;
    spec.days = days;
    spec.seed = seed;
    return spec;
}

EmpiricalPropagator table_only(const std::vector<double>& g0) {
    EmpiricalPropagator emp;
    emp.max_lag = static_cast<int>(g0.size());
    emp.table = Eigen::VectorXd::Zero(emp.max_lag + 1);
    emp.g = Eigen::VectorXd::Zero(emp.max_lag);
    for (int k = 0; k < emp.max_lag; ++k) {
        emp.table(k + 1) = g0[static_cast<std::size_t>(k)];
        emp.g(k) = emp.table(k + 1) - emp.table(k);
    }
    emp.covariance = Eigen::MatrixXd::Identity(emp.max_lag, emp.max_lag) * 1e-6;
    return emp;
}

}  // namespace

TEST_SUITE("calibration") {

TEST_CASE("linear impact recovers theta") {
    const auto series = simulate_market(synthetic(20.0, 15.0, 1'000, 20));
    const auto fit = estimate_impact_function(series, 30);
    CHECK(fit.form == ImpactForm::Linear);
    REQUIRE(fit.theta_se > 0.0);
    CHECK(std::abs(fit.theta_bp - 20.0) <= 3.0 * fit.theta_se);
    CHECK(fit.bins.size() == 30);
    std::size_t total = 0;
    for (const auto& b : fit.bins) {
        total += b.count;
    }
    CHECK(total == 2 * series.size());  // pooled with the mirrored sample
    CHECK(fit.evaluate(-0.3) == -fit.evaluate(0.3));
}

TEST_CASE("flat returns give zero impact") {
    auto series = simulate_market(synthetic(20.0, 15.0, 200, 2));
    for (auto& iv : series.intervals) {
        iv.r = 0.0;
    }
    const auto fit = estimate_impact_function(series);
    CHECK(fit.theta_bp == 0.0);
}

TEST_CASE("identical imbalances cannot be binned") {
    auto series = simulate_market(synthetic(20.0, 15.0, 100, 1));
    for (auto& iv : series.intervals) {
        iv.v = 0.0;
        iv.v_nor = 0.0;
    }
    try {
        estimate_impact_function(series);
        FAIL("expected DegenerateBins");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateBins);
    }
}

TEST_CASE("arctan impact on raw volume") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, 2.0);
    IntervalSeries series;
    series.scheme = AggregatedTradeTime{8};
    const double theta = 12.0;
    const double rho = 1.0 / 400.0;
    for (int i = 0; i < 40'000; ++i) {
        Interval iv;
        iv.day_id = i / 1'000;
        iv.index = i % 1'000;
        iv.W = 2'000.0;
        iv.v = 2'000.0 * u(rng);
        iv.v_nor = iv.v / iv.W;
        iv.r = (theta * std::atan(rho * iv.v) + noise(rng)) / kBasisPoints;
        series.intervals.push_back(iv);
    }
    const auto fit = estimate_impact_function(series, 30, ImpactForm::Arctan);
    CHECK(fit.theta_bp == doctest::Approx(theta).epsilon(0.03));
    CHECK(fit.rho == doctest::Approx(rho).epsilon(0.05));
    CHECK(fit.warnings.empty());
    CHECK(fit.regressor(series.intervals[3]) == series.intervals[3].v);
}

TEST_CASE("regression recovers the kernel increments") {
    const auto spec = synthetic(20.0, 15.0, 1'000, 20);
    const auto series = simulate_market(spec);
    const auto fit = estimate_impact_function(series);
    const auto emp = regress_propagator(series, fit, 10);
    const auto se = emp.g_std_errors();
    const double scale = 20.0 / fit.theta_bp;
    for (int k = 0; k < 10; ++k) {
        const double truth = spec.kernel(k + 1) - spec.kernel(k);
        CHECK(std::abs(emp.g(k) - truth * scale) <= 4.0 * se(k));
    }
    CHECK(emp.table(0) == 0.0);
    CHECK(emp.table(10) == doctest::Approx(emp.g.sum()));
    CHECK(emp.rows == 20u * (1'000u - 9u));
}

TEST_CASE("permanent one-lag impact") {
    auto spec = synthetic(20.0, 15.0, 1'000, 20, 7);
    spec.kernel = PropagatorKernel<double>::tabulated({1.0});
    const auto series = simulate_market(spec);
    const auto fit = estimate_impact_function(series);
    const auto emp = regress_propagator(series, fit, 8);
    const auto se = emp.g_std_errors();
    CHECK(std::abs(emp.g(0) - 20.0 / fit.theta_bp) <= 4.0 * se(0));
    for (int k = 1; k < 8; ++k) {
        CHECK(std::abs(emp.g(k)) <= 4.0 * se(k));
    }
}

TEST_CASE("regression guards") {
    const auto series = simulate_market(synthetic(20.0, 15.0, 50, 2));
    const auto fit = estimate_impact_function(series);
    try {
        regress_propagator(series, fit, 50);
        FAIL("expected InsufficientData");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InsufficientData);
    }
    CHECK_THROWS_AS(regress_propagator(series, fit, 5, 2), Error);
}

TEST_CASE("kernel fit on a noiseless table") {
    std::vector<double> g0;
    const auto truth = kernel_of(kVod);
    for (int k = 1; k <= 50; ++k) {
        g0.push_back(truth(k));
    }
    const auto kf = fit_kernel(table_only(g0));
    CHECK(kf.gamma0 == doctest::Approx(1.07).epsilon(1e-4));
    CHECK(kf.l0 == doctest::Approx(4.0).epsilon(1e-4));
    CHECK(kf.beta == doctest::Approx(0.075).epsilon(1e-4));
    CHECK(kf.residual_norm < 1e-8);
    CHECK_FALSE(kf.poor_fit);
}

TEST_CASE("constant table fits a flat kernel") {
    const auto kf = fit_kernel(table_only(std::vector<double>(20, 0.7)));
    CHECK(kf.beta == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(kf.kernel()(10) == doctest::Approx(0.7).epsilon(1e-8));
}

TEST_CASE("short tables are refused") {
    CHECK_THROWS_AS(fit_kernel(table_only({1.0, 0.9, 0.8})), Error);
}

TEST_CASE("R squared bounds") {
    // kernel flat beyond lag 6: lags up to max_lag explain everything
    auto spec = synthetic(20.0, 0.0, 300, 5);
    spec.kernel = PropagatorKernel<double>::tabulated({1.0, 0.8, 0.7, 0.65, 0.62, 0.6});
    const auto clean = simulate_market(spec);
    const auto fit = estimate_impact_function(clean);
    const auto emp = regress_propagator(clean, fit, 6);
    CHECK(r_squared(clean, fit, emp) == doctest::Approx(1.0).epsilon(1e-9));

    spec.theta_bp = 0.0;
    spec.sigma_bp = 20.0;
    const auto noise = simulate_market(spec);
    const auto nfit = estimate_impact_function(noise);
    const auto nemp = regress_propagator(noise, nfit, 6);
    CHECK(r_squared(noise, nfit, nemp) < 0.01);
}

TEST_CASE("R squared grows with the number of lags at fixed history") {
    const auto series = simulate_market(synthetic(20.0, 15.0, 500, 8));
    const auto fit = estimate_impact_function(series);
    double prev = 0.0;
    for (int k = 1; k <= 20; ++k) {
        const auto emp = regress_propagator(series, fit, k, 19);
        CHECK(emp.rows == 8u * (500u - 19u));
        const double r2 = r_squared(series, fit, emp);
        CHECK(r2 >= prev - 1e-12);
        prev = r2;
    }
}

TEST_CASE("noise variance is the mean squared residual") {
    const auto series = simulate_market(synthetic(20.0, 20.0, 1'000, 20));
    const auto fit = estimate_impact_function(series);
    const auto emp = regress_propagator(series, fit, 10);
    const auto noise = estimate_noise_variance(series, fit, emp);
    CHECK(noise.samples == emp.rows);
    CHECK(noise.sigma2_bp2 == doctest::Approx(emp.ss_res / static_cast<double>(emp.rows)));
    CHECK(noise.sigma2_bp2 == doctest::Approx(400.0).epsilon(0.05));
    const auto res = regression_residuals(series, fit, emp);
    CHECK(static_cast<std::size_t>(res.size()) == emp.rows);
    CHECK(res.squaredNorm() == doctest::Approx(emp.ss_res));
}

TEST_CASE("time-weighted half spread") {
    const Session s;
    const Timestamp day = 19'723 * kMicrosPerDay;
    std::vector<QuoteRecord> quotes{{day + s.open, 99.9, 100.1, 19'723}};
    CHECK(estimate_spread(quotes, s).delta_bp == doctest::Approx(10.0));

    // half the session at 10 bp, half at 20 bp
    const Timestamp half = s.open + s.length() / 2;
    quotes.push_back({day + half, 99.8, 100.2, 19'723});
    CHECK(estimate_spread(quotes, s).delta_bp == doctest::Approx(15.0));

    // a crossed quote is excluded and counted
    quotes.push_back({day + half + 10, 100.5, 100.4, 19'723});
    const auto est = estimate_spread(quotes, s);
    CHECK(est.crossed_quotes == 1);
    CHECK(est.quotes_used == 2);

    CHECK_THROWS_AS(estimate_spread({}, s), Error);
}

TEST_CASE("end-to-end calibration") {
    const auto series = simulate_market(synthetic(20.0, 18.0, 1'000, 30));
    const auto model = calibrate(series, SpreadEstimate{5.0, 10, 0}, {30, ImpactForm::Linear, 30});
    CHECK(model.delta_bp == 5.0);
    CHECK(model.intervals_per_day == 1'000);
    CHECK(model.intervals == series.size());
    CHECK(model.mean_volume == doctest::Approx(10'000.0));
    CHECK(model.sigma2_bp2 == doctest::Approx(324.0).epsilon(0.05));
    CHECK(model.linear_theta_bp() == model.impact.theta_bp);
    CHECK(model.r_squared > 0.0);
    CHECK(model.tabulated_kernel()(3) == doctest::Approx(model.propagator.table(3)));
}

}
