#include "support.hpp"
#include "texec/optimizer.hpp"

#include <doctest.h>

#include <cmath>

using namespace texec;
using namespace texec::testing;

namespace {

SolveResult<double> solve(const CostModel<double>& m, double total, double lambda) {
    OptimizationConfig c;
    c.total = total;
    c.lambda = lambda;
    return solve_with_spread(m, c);
}

int sign_changes(const Schedule<double>& v) {
    int n = 0;
    for (Index k = 1; k < v.size(); ++k) {
        n += (v(k) > 0.0) != (v(k - 1) > 0.0);
    }
    return n;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("flat baseline") {
    const auto v = bertsimas_lo_flat(100.0, 4);
    CHECK(v == Schedule<double>::Constant(4, 25.0));
}

TEST_CASE("Almgren-Chriss schedule") {
    const auto flat = almgren_chriss_schedule(1'000.0, 10, 10.0, 0.0, 400.0, 0.01);
    CHECK(flat.isApproxToConstant(100.0, 1e-14));

    double prev_ratio = 1.0;
    for (double lambda : {1e-6, 1e-5, 1e-4, 1e-3}) {
        const auto v = almgren_chriss_schedule(1'000.0, 10, 10.0, lambda, 400.0, 0.01);
        CHECK(v.sum() == doctest::Approx(1'000.0));
        for (Index k = 1; k < v.size(); ++k) {
            CHECK(v(k) < v(k - 1));
        }
        const double ratio = v(0) / v(9);
        CHECK(ratio > prev_ratio);
        prev_ratio = ratio;
    }
    // large b must not overflow
    const auto steep = almgren_chriss_schedule(1'000.0, 50, 50.0, 1.0, 1e4, 1e-6);
    CHECK(steep.allFinite());
    CHECK(steep(0) == doctest::Approx(1'000.0).epsilon(1e-6));
}

TEST_CASE("closed form on one interval and without impact") {
    const auto m1 = build_cost_model(kernel_of(kAzn), 15.4, kVolume, 350.0, 0.0, 1);
    CHECK(solve_closed_form(m1, 42.0)(0) == doctest::Approx(42.0));

    // zero impact and zero risk: every schedule is optimal; the minimum-norm one is flat
    const auto m0 = build_cost_model(kernel_of(kAzn), 0.0, kVolume, 350.0, 0.0, 6);
    CHECK(solve_closed_form(m0, 60.0).isApproxToConstant(10.0, 1e-9));
    CHECK(solve_closed_form(m0, 0.0).isZero());
}

TEST_CASE("closed form satisfies its optimality conditions") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const auto m = random_model(rng, 5 + rep, 0.0);
        const double lambda = rep % 2 ? 1e-6 : 0.0;
        const auto v = solve_closed_form(m, 500.0, lambda);
        CHECK(v.sum() == doctest::Approx(500.0).epsilon(1e-12));
        // gradient 2 F v is parallel to the ones vector
        const Vector<double> g = 2.0 * (m.symmetric_impact() + lambda * m.variance_matrix()) * v;
        CHECK((g.array() - g.mean()).abs().maxCoeff() < 1e-9 * g.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("spread-free optimum for AZN alternates in sign") {
    const auto m = stock_model(kAzn, 0.0);
    const auto v = solve_closed_form(m, one_percent(m));
    CHECK(v.minCoeff() < 0.0);
    CHECK(sign_changes(v) >= 2);
    CHECK(objective(m, v, 0.0) < objective(m, bertsimas_lo_flat(one_percent(m), m.size()), 0.0));
}

TEST_CASE("spread solver reduces to the closed form without spread") {
    for (const auto& s : kStocks) {
        const auto m = stock_model(s, 0.0);
        const double x = one_percent(m);
        for (double lambda : {0.0, 1e-6, 1e-4}) {
            const auto ref = solve_closed_form(m, x, lambda);
            const auto got = solve(m, x, lambda);
            CHECK(got.diagnostics.converged);
            CHECK((got.schedule - ref).cwiseAbs().maxCoeff() <= 1e-6 * ref.cwiseAbs().maxCoeff());
        }
    }
}

TEST_CASE("AZN with spread trades one-signed and U-shaped") {
    const auto m = stock_model(kAzn);
    const auto r = solve(m, one_percent(m), 0.0);
    const auto& v = r.schedule;
    CHECK(r.diagnostics.converged);
    CHECK(v.minCoeff() >= -1e-8 * v.maxCoeff());
    const double mid = v(m.size() / 2);
    CHECK(v(0) > mid);
    CHECK(v(m.size() - 1) > mid);
}

TEST_CASE("large spread forbids round trips") {
    const auto m = stock_model(kVod, 1e3);
    const auto r = solve(m, one_percent(m), 0.0);
    const auto rep = cost_report(m, r.schedule);
    CHECK(*rep.fractional_spread == doctest::Approx(1e3).epsilon(1e-8));
}

TEST_CASE("zero order size and sell orders") {
    const auto m = stock_model(kAapl);
    const auto zero = solve(m, 0.0, 1e-6);
    CHECK(zero.schedule.isZero());
    CHECK(zero.diagnostics.path == SolverPath::Trivial);

    const auto buy = solve(m, 1'000.0, 1e-6).schedule;
    const auto sell = solve(m, -1'000.0, 1e-6).schedule;
    CHECK((buy + sell).cwiseAbs().maxCoeff() < 1e-8 * buy.cwiseAbs().maxCoeff());
}

TEST_CASE("spread solver beats the baselines on random models") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 15; ++rep) {
        const auto m = random_model(rng, 4 + 3 * rep, 0.5 + rep);
        const double x = 2'000.0;
        const double lambda = rep % 3 == 0 ? 0.0 : 1e-6 * rep;
        const auto r = solve(m, x, lambda);
        CHECK(r.schedule.sum() == doctest::Approx(x).epsilon(1e-10));
        CHECK(r.diagnostics.objective <= objective(m, bertsimas_lo_flat(x, m.size()), lambda) * (1 + 1e-12));
        const auto ac = almgren_chriss_schedule(x, m.size(), static_cast<double>(m.size()), lambda,
                                                m.noise_variance(), matched_temporary_impact(m));
        CHECK(r.diagnostics.objective <= objective(m, ac, lambda) * (1 + 1e-12));
    }
}

TEST_CASE("smoothed solver agrees with the spread solver") {
    for (const auto& s : kStocks) {
        const auto m = stock_model(s);
        OptimizationConfig c;
        c.total = one_percent(m);
        c.lambda = 1e-7;
        const auto exact = solve_with_spread(m, c);
        const auto smooth = solve_smoothed(m, c);
        CHECK(smooth.diagnostics.objective >= exact.diagnostics.objective * (1 - 1e-9));
        CHECK(smooth.diagnostics.objective == doctest::Approx(exact.diagnostics.objective).epsilon(1e-5));
    }
}

TEST_CASE("frontier is monotone") {
    const auto m = stock_model(kVod);
    const auto points = efficient_frontier(m, one_percent(m), default_lambda_grid());
    REQUIRE(points.size() == 21);
    for (std::size_t i = 1; i < points.size(); ++i) {
        REQUIRE_FALSE(points[i].error);
        CHECK(points[i].variance <= points[i - 1].variance * (1 + 1e-9));
        CHECK(points[i].expected_cost >= points[i - 1].expected_cost * (1 - 1e-9));
    }
}

TEST_CASE("frontier input checks") {
    const auto m = stock_model(kVod);
    CHECK_THROWS_AS(efficient_frontier(m, 100.0, {}), Error);
    CHECK_THROWS_AS(efficient_frontier(m, 0.0, {0.0}), Error);
    CHECK_THROWS_AS(efficient_frontier(m, 100.0, {-1.0}), Error);
    CHECK_THROWS_AS(log_lambda_grid(0.0, 1.0, 3, false), Error);
    const auto grid = log_lambda_grid(1e-6, 1e-2, 5, true);
    REQUIRE(grid.size() == 6);
    CHECK(grid[0] == 0.0);
    CHECK(grid[3] == doctest::Approx(1e-4));
}

TEST_CASE("risk aversion front-loads AMZN") {
    const auto m = stock_model(kAmzn);
    const double x = one_percent(m);
    const Index half = m.size() / 2;
    double prev = -1.0;
    for (double lambda : {0.0, 1e-6, 1e-5, 1e-4}) {
        const auto v = solve(m, x, lambda).schedule;
        const double early = v.head(half).sum() / x;
        CHECK(early >= prev - 1e-9);
        prev = early;
    }
    CHECK(prev > 0.6);
}

}
