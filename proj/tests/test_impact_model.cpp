#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace texec;
using namespace texec::testing;

namespace {

PropagatorKernel<double> constant_kernel(double c) { return PropagatorKernel<double>::tabulated({c}); }

ErrorKind kind_of(const auto& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_SUITE("impact_model") {

TEST_CASE("kernel evaluation") {
    const auto k = PropagatorKernel<double>::parametric(1.40, 20.0, 0.190);
    CHECK(k(0) == 0.0);
    CHECK(k(1) == doctest::Approx(1.40 / std::pow(401.0, 0.095)));
    for (Index l = 1; l < 200; ++l) {
        CHECK(k(l) > 0.0);
        CHECK(k(l + 1) <= k(l));
    }
    const auto t = PropagatorKernel<double>::tabulated({0.5, 0.8, 0.9});
    CHECK(t(2) == 0.8);
    CHECK(t(7) == 0.9);  // holds the last value
    CHECK(kind_of([] { PropagatorKernel<double>::parametric(1.0, 1.0, 2.0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { PropagatorKernel<double>::parametric(0.0, 1.0, 0.5); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("effective propagator of a constant kernel") {
    const auto gt = effective_propagator(constant_kernel(3.0), 5);
    CHECK(gt(0) == 1.5);
    for (Index k = 1; k < 5; ++k) {
        CHECK(gt(k) == 3.0);
    }
}

TEST_CASE("effective propagator of the AZN kernel and N = 1") {
    const auto kernel = kernel_of(kAzn);
    const double g1 = 1.40 / std::pow(401.0, 0.095);
    CHECK(effective_propagator(kernel, 102)(0) == doctest::Approx(g1 / 2.0).epsilon(1e-14));
    const auto one = effective_propagator(kernel, 1);
    REQUIRE(one.size() == 1);
    CHECK(one(0) == doctest::Approx(g1 / 2.0));
    const auto gt = effective_propagator(kernel, 10);
    for (Index k = 1; k < 10; ++k) {
        CHECK(gt(k) == doctest::Approx(0.5 * (kernel(k) + kernel(k + 1))));
    }
}

TEST_CASE("two-interval impact matrix") {
    const auto kernel = PropagatorKernel<double>::parametric(1.0, 2.0, 0.5);
    const auto m = build_cost_model(kernel, 10.0, 1.0, 0.0, 0.0, 2);
    const auto gt = effective_propagator(kernel, 2);
    Matrix<double> expected(2, 2);
    expected << gt(0), 0.0, gt(1), gt(0);
    CHECK((m.impact_matrix() - 10.0 * expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("per-interval volumes scale the columns") {
    const auto kernel = PropagatorKernel<double>::parametric(1.0, 2.0, 1.5);
    Vector<double> w(2);
    w << 4'000.0, 1'000.0;
    const auto m = build_cost_model(kernel, 8.0, w, 1.0, 0.0, 2);
    const auto gt = effective_propagator(kernel, 2);
    CHECK(m.impact_matrix()(0, 0) == doctest::Approx(2e-3 * gt(0)));
    CHECK(m.impact_matrix()(1, 0) == doctest::Approx(2e-3 * gt(1)));
    CHECK(m.impact_matrix()(1, 1) == doctest::Approx(8e-3 * gt(0)));
    CHECK(m.impact_matrix()(0, 1) == 0.0);
}

TEST_CASE("variance matrix for N = 3") {
    Matrix<double> expected(3, 3);
    expected << 0, 0, 0, 0, 1, 1, 0, 1, 2;
    CHECK(variance_matrix(2.5, 3) == 2.5 * expected);
}

TEST_CASE("increasing kernel is refused as non-convex") {
    const auto kernel = PropagatorKernel<double>::tabulated({1.0, 10.0});
    for (Index n = 3; n <= 8; ++n) {
        // oracle: the smallest eigenvalue of the symmetrized matrix is negative
        const auto gt = effective_propagator(kernel, n);
        Matrix<double> imp = Matrix<double>::Zero(n, n);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j <= i; ++j) {
                imp(i, j) = gt(i - j);
            }
        }
        const Matrix<double> sym = (imp + imp.transpose()) / 2.0;
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix<double>>(sym).eigenvalues().minCoeff() < 0.0);
        CHECK(kind_of([&] { build_cost_model(kernel, 1.0, 1.0, 1.0, 0.0, n); }) == ErrorKind::NonConvexImpactMatrix);
    }
}

TEST_CASE("zero schedule costs nothing") {
    const auto m = stock_model(kAzn);
    const Schedule<double> v = Schedule<double>::Zero(m.size());
    const auto r = cost_report(m, v);
    CHECK(r.expected_impact_cost == 0.0);
    CHECK(r.expected_spread_cost == 0.0);
    CHECK(r.variance == 0.0);
    CHECK_FALSE(r.fractional_impact.has_value());  // ZeroTotalVolume
}

TEST_CASE("single interval costs") {
    const auto kernel = kernel_of(kVod);
    const auto m = build_cost_model(kernel, 26.0, 1'000.0, 400.0, 10.0, 1);
    Schedule<double> v(1);
    v << 50.0;
    CHECK(impact_cost(m, v) == doctest::Approx(26.0 / 1'000.0 * kernel(1) / 2.0 * 2'500.0));
    CHECK(spread_cost(m, v) == doctest::Approx(500.0));
    CHECK(cost_variance(m, v) == 0.0);
}

TEST_CASE("variance of a unit trade in the second interval is sigma^2") {
    const auto m = stock_model(kAapl);
    Schedule<double> v = Schedule<double>::Zero(m.size());
    v(1) = 1.0;
    CHECK(cost_variance(m, v) == doctest::Approx(kAapl.sigma2_bp2));
}

TEST_CASE("objective adds its parts") {
    const auto m = stock_model(kAmzn);
    Schedule<double> v = Schedule<double>::LinSpaced(m.size(), -50.0, 200.0);
    const double lambda = 3e-6;
    CHECK(objective(m, v, 0.0) == doctest::Approx(impact_cost(m, v) + spread_cost(m, v)));
    CHECK(objective(m, v, lambda) ==
          doctest::Approx(v.dot(m.impact_matrix() * v) + lambda * v.dot(m.variance_matrix() * v) +
                          kAmzn.delta_bp * v.cwiseAbs().sum()));
    CHECK(objective(m.with_half_spread(0.0), v, 0.0) == doctest::Approx(v.dot(m.impact_matrix() * v)));
    CHECK(kind_of([&] { objective(m, v, -1.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("fractional spread equals delta for one-signed schedules") {
    const auto m = stock_model(kVod);
    const Schedule<double> v = Schedule<double>::LinSpaced(m.size(), 1.0, 300.0);
    const auto r = cost_report(m, v);
    CHECK(*r.fractional_spread == doctest::Approx(kVod.delta_bp).epsilon(1e-14));
    CHECK(*r.fractional_impact == doctest::Approx(impact_cost(m, v) / v.sum()));
}

TEST_CASE("participation rates") {
    Schedule<double> v(2);
    v << 30.0, 10.0;
    Vector<double> w(2);
    w << 1'000.0, 2'000.0;
    const auto x = to_participation(v, w);
    CHECK(x(0) == doctest::Approx(0.03));
    CHECK(x(1) == doctest::Approx(0.005));
    CHECK(to_participation(Schedule<double>::Zero(2), w).isZero());

    const Vector<double> flat = Vector<double>::Constant(4, 5'000.0);
    CHECK(to_participation(Schedule<double>(0.01 * flat), flat).isApproxToConstant(0.01));

    w(1) = 0.0;
    CHECK(kind_of([&] { to_participation(v, w); }) == ErrorKind::InfeasibleParticipation);
}

TEST_CASE("flat one-percent costs at the published parameters") {
    const auto m = stock_model(kAzn);
    const auto v = Schedule<double>::Constant(m.size(), one_percent(m) / static_cast<double>(m.size()));
    const auto r = cost_report(m, Schedule<double>(v));
    CHECK(*r.fractional_spread == kAzn.delta_bp);
    // per-share impact of a flat schedule: theta/W * x * sum_k (N - k) Gt(k) / N
    const auto gt = m.effective_propagator();
    double expected = 0.0;
    for (Index k = 0; k < m.size(); ++k) {
        expected += static_cast<double>(m.size() - k) * gt(k);
    }
    expected *= kAzn.theta_bp * 0.01 / static_cast<double>(m.size());
    CHECK(*r.fractional_impact == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("models instantiate for other scalar types") {
    const auto kf = PropagatorKernel<float>::parametric(1.4f, 20.0f, 0.19f);
    const auto mf = build_cost_model(kf, 15.4f, 1e4f, 350.0f, 5.27f, 10);
    const Schedule<float> vf = Schedule<float>::Constant(10, 100.0f);
    const auto kl = kernel_of(kAzn).cast<long double>();
    const auto ml = build_cost_model(kl, 15.4L, 1e4L, 350.81L, 5.27L, 10);
    const Schedule<long double> vl = Schedule<long double>::Constant(10, 100.0L);
    CHECK(static_cast<double>(impact_cost(ml, vl)) == doctest::Approx(static_cast<double>(impact_cost(mf, vf))).epsilon(1e-5));
}

}
