// Randomized identities over many generated models and schedules.

#include "support.hpp"
#include "texec/calibration.hpp"
#include "texec/optimizer.hpp"
#include "texec/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace texec;
using namespace texec::testing;

namespace {

constexpr int kCases = 100;

Schedule<double> random_schedule(std::mt19937_64& rng, Index n, double scale = 1'000.0) {
    std::normal_distribution<double> z(0.0, scale);
    Schedule<double> v(n);
    for (Index k = 0; k < n; ++k) {
        v(k) = z(rng);
    }
    return v;
}

}  // namespace

TEST_SUITE("properties") {

TEST_CASE("variance equals the sum of squared remaining volumes") {
    std::mt19937_64 rng(101);
    for (int c = 0; c < kCases; ++c) {
        const Index n = 1 + c % 40;
        const auto m = random_model(rng, n, 1.0);
        const auto v = random_schedule(rng, n);
        double direct = 0.0;
        for (Index k = 1; k < n; ++k) {
            const double rest = v.tail(n - k).sum();
            direct += rest * rest;
        }
        CHECK(cost_variance(m, v) == doctest::Approx(m.noise_variance() * direct).epsilon(1e-10));
    }
}

TEST_CASE("inclusive noise convention adds sigma^2 X^2") {
    std::mt19937_64 rng(109);
    for (int c = 0; c < kCases; ++c) {
        const Index n = 1 + c % 40;
        const auto m = random_model(rng, n, 1.0);
        const auto v = random_schedule(rng, n);
        double inclusive = 0.0;
        for (Index k = 0; k < n; ++k) {
            const double rest = v.tail(n - k).sum();
            inclusive += rest * rest;
        }
        const double x = v.sum();
        CHECK(m.noise_variance() * inclusive ==
              doctest::Approx(cost_variance(m, v) + m.noise_variance() * x * x).epsilon(1e-10));
    }
}

TEST_CASE("impact functions are odd") {
    std::mt19937_64 rng(110);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int c = 0; c < kCases; ++c) {
        ImpactFunctionFit f;
        f.form = c % 2 ? ImpactForm::Arctan : ImpactForm::Linear;
        f.theta_bp = 1.0 + 30.0 * u(rng);
        f.rho = 1e-4 + 1e-2 * u(rng);
        const double x = (c % 2 ? 5'000.0 : 1.0) * (2.0 * u(rng) - 1.0);
        CHECK(f.evaluate(-x) == -f.evaluate(x));
        CHECK(f.evaluate(0.0) == 0.0);
    }
}

TEST_CASE("impact cost equals the double sum") {
    std::mt19937_64 rng(102);
    for (int c = 0; c < kCases; ++c) {
        const Index n = 1 + c % 30;
        const auto m = random_model(rng, n, 0.0);
        const auto v = random_schedule(rng, n);
        const auto& w = m.market_volume();
        const auto& kernel = m.kernel();
        double direct = 0.0;
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j <= i; ++j) {
                const double gt = i == j ? kernel(1) / 2.0 : (kernel(i - j) + kernel(i - j + 1)) / 2.0;
                direct += v(i) * m.theta() / w(j) * gt * v(j);
            }
        }
        CHECK(impact_cost(m, v) == doctest::Approx(direct).epsilon(1e-10));
        CHECK(impact_cost(m, v) == doctest::Approx(v.dot(m.symmetric_impact() * v)).epsilon(1e-10));
    }
}

TEST_CASE("costs scale with order size") {
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int c = 0; c < kCases; ++c) {
        const Index n = 2 + c % 25;
        const auto m = random_model(rng, n, 2.0);
        const auto v = random_schedule(rng, n);
        const double a = u(rng);
        const Schedule<double> av = a * v;
        CHECK(impact_cost(m, av) == doctest::Approx(a * a * impact_cost(m, v)).epsilon(1e-10));
        CHECK(cost_variance(m, av) == doctest::Approx(a * a * cost_variance(m, v)).epsilon(1e-10));
        CHECK(spread_cost(m, av) == doctest::Approx(a * spread_cost(m, v)).epsilon(1e-12));
        // sign flip
        CHECK(objective(m, Schedule<double>(-v), 1e-6) == doctest::Approx(objective(m, v, 1e-6)).epsilon(1e-12));
    }
}

TEST_CASE("optimal schedules are odd and homogeneous in the order size") {
    std::mt19937_64 rng(104);
    std::uniform_real_distribution<double> u(0.2, 5.0);
    for (int c = 0; c < kCases; ++c) {
        const Index n = 2 + c % 15;
        const auto m = random_model(rng, n, 0.5 + c % 7);
        OptimizationConfig cfg;
        cfg.lambda = (c % 4) * 1e-6;
        cfg.total = 1'000.0;
        const auto base = solve_with_spread(m, cfg).schedule;
        const double a = u(rng) * (c % 2 ? -1.0 : 1.0);
        cfg.total = 1'000.0 * a;
        const auto scaled = solve_with_spread(m, cfg).schedule;
        CHECK((scaled - a * base).cwiseAbs().maxCoeff() <= 1e-6 * std::abs(a) * base.cwiseAbs().maxCoeff());
        CHECK(scaled.sum() == doctest::Approx(cfg.total).epsilon(1e-12));
    }
}

TEST_CASE("effective propagator recurrence") {
    std::mt19937_64 rng(105);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int c = 0; c < kCases; ++c) {
        const auto kernel = PropagatorKernel<double>::parametric(0.1 + u(rng), 30.0 * u(rng), 1.99 * u(rng));
        const Index n = 1 + c;
        const auto gt = effective_propagator(kernel, n);
        CHECK(gt(0) == kernel(1) / 2.0);
        for (Index k = 1; k < n; ++k) {
            CHECK(2.0 * (gt(k) - gt(k - 1)) == doctest::Approx(kernel(k + 1) - kernel(k - 1)).epsilon(1e-12));
        }
    }
}

TEST_CASE("solver meets the volume constraint") {
    std::mt19937_64 rng(106);
    std::uniform_real_distribution<double> u(-1e5, 1e5);
    for (int c = 0; c < kCases; ++c) {
        const Index n = 1 + c % 50;
        const auto m = random_model(rng, n, c % 3 == 0 ? 0.0 : 3.0);
        OptimizationConfig cfg;
        cfg.total = u(rng);
        cfg.lambda = (c % 5) * 1e-7;
        const auto r = solve_with_spread(m, cfg);
        CHECK(std::abs(r.schedule.sum() - cfg.total) <= 1e-9 * std::abs(cfg.total));
        CHECK(r.diagnostics.constraint_residual <= 1e-9);
    }
}

TEST_CASE("seeded simulations are reproducible") {
    std::mt19937_64 rng(107);
    for (int c = 0; c < kCases; ++c) {
        MarketSpec spec;
        spec.seed = rng();
        spec.intervals_per_day = 10 + c;
        spec.days = 1 + c % 3;
        spec.persistence = (c % 10) / 10.0;
        const auto a = simulate_market(spec);
        const auto b = simulate_market(spec);
        bool same = a.size() == b.size();
        for (std::size_t i = 0; same && i < a.size(); ++i) {
            same = a.intervals[i].r == b.intervals[i].r && a.intervals[i].v == b.intervals[i].v;
        }
        CHECK(same);
    }
}

TEST_CASE("prices are cumulative sums of returns") {
    std::mt19937_64 rng(108);
    for (int c = 0; c < kCases; ++c) {
        MarketSpec spec;
        spec.seed = rng();
        spec.intervals_per_day = 5 + c;
        const auto s = simulate_market(spec);
        double p = s.intervals.front().p_open;
        CHECK(p == doctest::Approx(std::log(spec.initial_price)));
        for (std::size_t i = 0; i + 1 < s.size(); ++i) {
            p += s.intervals[i].r;
            CHECK(s.intervals[i + 1].p_open == doctest::Approx(p).epsilon(1e-13));
        }
    }
}

}
