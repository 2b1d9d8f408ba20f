#pragma once

// Optimal execution schedules for a CostModel.
//
//   minimize   v' (I + lambda V) v + delta * |v|_1
//   subject to 1' v = X
//
// Only the symmetric part F = (I + I')/2 + lambda V enters the quadratic form,
// so every solver works with F. Without spread the minimizer is
// v* = X F^-1 1 / (1' F^-1 1).
//
// With spread the problem is solved on the normalized variable u = v / X
// (1'u = 1) after the exact split u = a - b, a, b >= 0, |u| -> a + b. An
// augmented-Lagrangian outer loop enforces 1'u = 1; each bound-constrained
// subproblem is solved by a projected Newton method with a small proximal
// term. The resulting sign pattern seeds an active-set refinement that solves
// the KKT system on the support exactly.

#include "texec/impact_model.hpp"
#include "texec/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace texec {

struct OptimizationConfig {
    /// Risk aversion, 1 / (bp * shares).
    double lambda = 0.0;
    /// Parent order size X in shares (signed).
    double total = 0.0;
    /// Relative tolerance on the normalized problem.
    double tolerance = 1e-10;
    /// Cap on projected-Newton iterations summed over outer iterations.
    int max_iterations = 20000;
    /// Extra randomized starting points beyond the flat schedule.
    int extra_starts = 0;
    std::uint64_t seed = 0;
};

enum class SolverPath { Trivial, ClosedForm, Numerical, NumericalActiveSet, Smoothed, AlmgrenChriss };

inline const char* to_string(SolverPath p) {
    switch (p) {
        case SolverPath::Trivial: return "trivial";
        case SolverPath::ClosedForm: return "closed-form";
        case SolverPath::Numerical: return "numerical";
        case SolverPath::NumericalActiveSet: return "numerical+active-set";
        case SolverPath::Smoothed: return "smoothed";
        case SolverPath::AlmgrenChriss: return "almgren-chriss";
    }
    return "unknown";
}

struct SolveDiagnostics {
    int iterations = 0;
    int outer_iterations = 0;
    /// Max KKT violation on the normalized problem.
    double stationarity = 0.0;
    double objective = 0.0;
    /// |sum(v) - X| / |X|.
    double constraint_residual = 0.0;
    SolverPath path = SolverPath::Trivial;
    bool converged = true;
};

template <typename Scalar>
struct SolveResult {
    Schedule<Scalar> schedule;
    SolveDiagnostics diagnostics;
};

/// v_k = X / N.
template <typename Scalar = double>
Schedule<Scalar> bertsimas_lo_flat(Scalar total, Index n) {
    require(n >= 1, "flat schedule needs N >= 1");
    return Schedule<Scalar>::Constant(n, total / static_cast<Scalar>(n));
}

/// v_k proportional to cosh(b (T - t_k)), t_k = k T / N, b = sqrt(lambda sigma^2 / rho), sum v = X.
template <typename Scalar = double>
Schedule<Scalar> almgren_chriss_schedule(Scalar total, Index n, Scalar horizon, Scalar lambda, Scalar sigma2,
                                         Scalar rho) {
    require(n >= 1, "Almgren-Chriss schedule needs N >= 1");
    require(horizon > Scalar(0), "horizon must be positive");
    require(rho > Scalar(0), "temporary impact coefficient must be positive");
    require(lambda >= Scalar(0), "risk aversion must be non-negative");
    require(sigma2 >= Scalar(0), "noise variance must be non-negative");
    using std::exp;
    using std::sqrt;
    const Scalar b = sqrt(lambda * sigma2 / rho);
    // cosh(b s) / cosh(b T), evaluated without overflow.
    Schedule<Scalar> w(n);
    for (Index k = 0; k < n; ++k) {
        const Scalar s = horizon - horizon * static_cast<Scalar>(k) / static_cast<Scalar>(n);
        w(k) = exp(b * (s - horizon)) * (Scalar(1) + exp(Scalar(-2) * b * s));
    }
    return w * (total / w.sum());
}

/// AC temporary-impact coefficient matched to the propagator model's
/// instantaneous cost: rho = theta * Gt(0) / W (bp per share).
template <typename Scalar>
Scalar matched_temporary_impact(const CostModel<Scalar>& model) {
    return model.theta_per_share().mean() * model.effective_propagator()(0);
}

/// Spread-free optimum v* = X F^-1 1 / (1' F^-1 1), F = (I + I')/2 + lambda V.
/// A singular but positive semidefinite F is regularized by 1e-12 trace(F)/N,
/// which selects the minimum-norm minimizer.
template <typename Scalar>
Schedule<Scalar> solve_closed_form(const CostModel<Scalar>& model, Scalar total, Scalar lambda = Scalar(0)) {
    require(lambda >= Scalar(0), "risk aversion must be non-negative");
    const Index n = model.size();
    if (total == Scalar(0)) {
        return Schedule<Scalar>::Zero(n);
    }
    Matrix<Scalar> f = model.symmetric_impact() + lambda * model.variance_matrix();
    const Vector<Scalar> ones = Vector<Scalar>::Ones(n);
    Vector<Scalar> y;
    if (check_positive_definite(f).positive_definite) {
        y = f.ldlt().solve(ones);
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(f, Eigen::EigenvaluesOnly);
        using std::abs;
        const Scalar top = eig.eigenvalues().cwiseAbs().maxCoeff();
        if (eig.eigenvalues().minCoeff() < -Scalar(1e-10) * top) {
            fail(ErrorKind::NonConvex, "impact plus risk matrix is indefinite");
        }
        Scalar ridge = Scalar(1e-12) * f.trace() / static_cast<Scalar>(n);
        if (!(ridge > Scalar(0))) {
            ridge = Scalar(1e-12);
        }
        f.diagonal().array() += ridge;
        y = f.ldlt().solve(ones);
    }
    const Scalar denom = y.sum();
    using std::isfinite;
    if (!isfinite(static_cast<double>(denom)) || denom == Scalar(0)) {
        fail(ErrorKind::SingularSystem, "closed-form system is singular");
    }
    return y * (total / denom);
}

namespace detail {

template <typename Scalar>
struct L1QpResult {
    Vector<Scalar> u;
    int iterations = 0;
    int outer_iterations = 0;
    bool converged = false;
    bool active_set = false;
    Scalar stationarity = Scalar(0);
};

template <typename Scalar>
Scalar l1qp_value(const Matrix<Scalar>& a, Scalar d, const Vector<Scalar>& u) {
    return u.dot(a * u) + d * u.template lpNorm<1>();
}

/// KKT violation of u for min u'Au + d|u|_1 s.t. 1'u = 1, with the best
/// multiplier for the current support.
template <typename Scalar>
Scalar l1qp_stationarity(const Matrix<Scalar>& a, Scalar d, const Vector<Scalar>& u) {
    using std::abs;
    const Vector<Scalar> g = Scalar(2) * (a * u);
    const Scalar scale = u.cwiseAbs().maxCoeff();
    const Scalar thresh = Scalar(1e-12) * (scale > Scalar(0) ? scale : Scalar(1));
    // multiplier from the support: g_k + mu + d sign(u_k) = 0
    Scalar mu_sum = 0;
    Index count = 0;
    for (Index k = 0; k < u.size(); ++k) {
        if (abs(u(k)) > thresh) {
            mu_sum += -(g(k) + d * (u(k) > 0 ? Scalar(1) : Scalar(-1)));
            ++count;
        }
    }
    const Scalar mu = count > 0 ? mu_sum / static_cast<Scalar>(count) : Scalar(0);
    Scalar worst = 0;
    for (Index k = 0; k < u.size(); ++k) {
        Scalar r;
        if (abs(u(k)) > thresh) {
            r = abs(g(k) + mu + d * (u(k) > 0 ? Scalar(1) : Scalar(-1)));
        } else {
            r = std::max(Scalar(0), abs(g(k) + mu) - d);
        }
        worst = std::max(worst, r);
    }
    return worst;
}

/// Active-set refinement: solves the KKT system exactly on a sign pattern and
/// updates the pattern until all conditions hold.
template <typename Scalar>
std::optional<Vector<Scalar>> l1qp_active_set(const Matrix<Scalar>& a, Scalar d, const Vector<Scalar>& start) {
    using std::abs;
    const Index n = a.rows();
    std::vector<int> sign(static_cast<std::size_t>(n), 0);
    const Scalar scale = start.cwiseAbs().maxCoeff();
    for (Index k = 0; k < n; ++k) {
        if (d == Scalar(0) || abs(start(k)) > Scalar(1e-9) * scale) {
            sign[k] = start(k) > 0 ? 1 : (start(k) < 0 ? -1 : 1);
        }
    }
    const Scalar tol = Scalar(1e-10);
    for (Index iter = 0; iter < 4 * n + 10; ++iter) {
        std::vector<Index> free;
        for (Index k = 0; k < n; ++k) {
            if (sign[k] != 0) {
                free.push_back(k);
            }
        }
        if (free.empty()) {
            return std::nullopt;
        }
        const Index m = static_cast<Index>(free.size());
        Matrix<Scalar> kkt = Matrix<Scalar>::Zero(m + 1, m + 1);
        Vector<Scalar> rhs(m + 1);
        for (Index i = 0; i < m; ++i) {
            for (Index j = 0; j < m; ++j) {
                kkt(i, j) = Scalar(2) * a(free[i], free[j]);
            }
            kkt(i, m) = Scalar(1);
            kkt(m, i) = Scalar(1);
            rhs(i) = -d * static_cast<Scalar>(sign[free[i]]);
        }
        rhs(m) = Scalar(1);
        const Vector<Scalar> sol = kkt.fullPivLu().solve(rhs);
        if (!sol.allFinite()) {
            return std::nullopt;
        }
        Vector<Scalar> u = Vector<Scalar>::Zero(n);
        for (Index i = 0; i < m; ++i) {
            u(free[i]) = sol(i);
        }
        const Scalar mu = sol(m);
        const Vector<Scalar> g = Scalar(2) * (a * u);
        const Scalar gscale = std::max(Scalar(1), g.cwiseAbs().maxCoeff());

        bool changed = false;
        if (d > Scalar(0)) {
            for (Index i = 0; i < m; ++i) {
                if (u(free[i]) * static_cast<Scalar>(sign[free[i]]) <= Scalar(0)) {
                    sign[free[i]] = 0;
                    changed = true;
                }
            }
        }
        if (!changed) {
            for (Index k = 0; k < n; ++k) {
                if (sign[k] == 0 && abs(g(k) + mu) > d + tol * gscale) {
                    sign[k] = (g(k) + mu) > 0 ? -1 : 1;
                    changed = true;
                }
            }
        }
        if (!changed) {
            return u;
        }
    }
    return std::nullopt;
}

/// min u'Au + d|u|_1 s.t. 1'u = 1 for symmetric positive semidefinite A with
/// unit-order diagonal.
template <typename Scalar>
L1QpResult<Scalar> solve_l1_qp(const Matrix<Scalar>& a, Scalar d, const Vector<Scalar>& start, Scalar tolerance,
                               int max_iterations) {
    using std::abs;
    const Index n = a.rows();
    const Index n2 = 2 * n;
    const Scalar kappa = Scalar(1e-8);

    Vector<Scalar> z(n2);
    z.head(n) = start.cwiseMax(Scalar(0));
    z.tail(n) = (-start).cwiseMax(Scalar(0));
    Vector<Scalar> center = z;
    Scalar mu = 0;
    Scalar rho = 10;

    auto u_of = [n](const Vector<Scalar>& zz) -> Vector<Scalar> { return zz.head(n) - zz.tail(n); };
    auto value = [&](const Vector<Scalar>& zz) {
        const Vector<Scalar> u = u_of(zz);
        const Scalar c = u.sum() - Scalar(1);
        return u.dot(a * u) + d * zz.sum() + mu * c + rho / Scalar(2) * c * c +
               kappa / Scalar(2) * (zz - center).squaredNorm();
    };
    auto gradient = [&](const Vector<Scalar>& zz) {
        const Vector<Scalar> u = u_of(zz);
        const Scalar c = u.sum() - Scalar(1);
        const Vector<Scalar> gu = Scalar(2) * (a * u) + Vector<Scalar>::Constant(n, mu + rho * c);
        Vector<Scalar> g(n2);
        g.head(n) = gu.array() + d;
        g.tail(n) = -gu.array() + d;
        g += kappa * (zz - center);
        return g;
    };

    L1QpResult<Scalar> out;
    Scalar prev_violation = std::numeric_limits<Scalar>::infinity();
    Vector<Scalar> u_prev = u_of(z);
    const int max_outer = 400;

    for (int outer = 0; outer < max_outer; ++outer) {
        out.outer_iterations = outer + 1;
        // projected Newton on the bound-constrained subproblem
        for (int inner = 0; inner < 100; ++inner) {
            const Vector<Scalar> g = gradient(z);
            const Vector<Scalar> projected = z - (z - g).cwiseMax(Scalar(0));
            const Scalar pg = projected.cwiseAbs().maxCoeff();
            if (pg <= tolerance * Scalar(1e-2)) {
                break;
            }
            if (out.iterations >= max_iterations) {
                break;
            }
            ++out.iterations;
            const Scalar eps = std::min(Scalar(1e-3), projected.norm());
            std::vector<Index> free;
            std::vector<Index> active;
            for (Index i = 0; i < n2; ++i) {
                if (z(i) <= eps && g(i) > Scalar(0)) {
                    active.push_back(i);
                } else {
                    free.push_back(i);
                }
            }
            auto hess = [&](Index i, Index j) {
                const Index ui = i % n;
                const Index uj = j % n;
                const Scalar s = ((i < n) == (j < n)) ? Scalar(1) : Scalar(-1);
                Scalar h = s * (Scalar(2) * a(ui, uj) + rho);
                if (i == j) {
                    h += kappa;
                }
                return h;
            };
            Vector<Scalar> step = Vector<Scalar>::Zero(n2);
            if (!free.empty()) {
                const Index m = static_cast<Index>(free.size());
                Matrix<Scalar> h(m, m);
                Vector<Scalar> rhs(m);
                for (Index i = 0; i < m; ++i) {
                    for (Index j = 0; j < m; ++j) {
                        h(i, j) = hess(free[i], free[j]);
                    }
                    rhs(i) = -g(free[i]);
                }
                Eigen::LDLT<Matrix<Scalar>> ldlt(h);
                const Vector<Scalar> sol = ldlt.solve(rhs);
                for (Index i = 0; i < m; ++i) {
                    step(free[i]) = sol(i);
                }
            }
            for (Index i : active) {
                step(i) = -g(i) / hess(i, i);
            }
            const Scalar f0 = value(z);
            Scalar alpha = 1;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                const Vector<Scalar> trial = (z + alpha * step).cwiseMax(Scalar(0));
                const Scalar decrease = g.dot(trial - z);
                if (value(trial) <= f0 + Scalar(1e-4) * decrease) {
                    z = trial;
                    accepted = true;
                    break;
                }
                alpha /= 2;
            }
            if (!accepted) {
                break;
            }
        }

        const Vector<Scalar> u = u_of(z);
        const Scalar violation = u.sum() - Scalar(1);
        const Scalar change = (u - u_prev).cwiseAbs().maxCoeff();
        u_prev = u;
        mu += rho * violation;
        if (abs(violation) > Scalar(0.25) * prev_violation) {
            rho = std::min(rho * Scalar(10), Scalar(1e8));
        }
        prev_violation = abs(violation);
        center = z;
        // a sign pattern that already satisfies the KKT conditions is optimal
        if (abs(violation) <= Scalar(1e-6)) {
            if (auto refined = l1qp_active_set(a, d, u)) {
                out.u = *refined;
                out.active_set = true;
                out.converged = true;
                out.stationarity = l1qp_stationarity(a, d, out.u);
                return out;
            }
        }
        if (abs(violation) <= tolerance * Scalar(1e-2) && change <= tolerance) {
            out.converged = true;
            break;
        }
        if (out.iterations >= max_iterations) {
            break;
        }
    }

    out.u = u_of(z);
    const Scalar al_value = l1qp_value(a, d, out.u);
    if (auto refined = l1qp_active_set(a, d, out.u)) {
        const Scalar refined_value = l1qp_value(a, d, *refined);
        if (refined_value <= al_value + Scalar(1e-9) * std::max(Scalar(1), abs(al_value))) {
            out.u = *refined;
            out.active_set = true;
            out.converged = true;
        }
    }
    out.stationarity = l1qp_stationarity(a, d, out.u);
    return out;
}

/// Normalized data for u = v / X: A = F / s, d = delta / (|X| s), s = trace(F) / N.
template <typename Scalar>
struct NormalizedProblem {
    Matrix<Scalar> a;
    Scalar d;
    Scalar scale;
};

template <typename Scalar>
NormalizedProblem<Scalar> normalize(const CostModel<Scalar>& model, Scalar total, Scalar lambda) {
    using std::abs;
    const Index n = model.size();
    Matrix<Scalar> f = model.symmetric_impact() + lambda * model.variance_matrix();
    Scalar s = f.trace() / static_cast<Scalar>(n);
    if (!(s > Scalar(0))) {
        s = Scalar(1);
    }
    return {f / s, model.half_spread() / (abs(total) * s), s};
}

template <typename Scalar>
SolveDiagnostics finish(const CostModel<Scalar>& model, const Schedule<Scalar>& v, Scalar total, Scalar lambda) {
    using std::abs;
    SolveDiagnostics diag;
    diag.objective = static_cast<double>(objective(model, v, lambda));
    diag.constraint_residual = static_cast<double>(abs(v.sum() - total) / abs(total));
    return diag;
}

}  // namespace detail

/// Minimizes v'(I + lambda V)v + delta |v|_1 subject to sum(v) = X.
/// Never throws on slow convergence: the best iterate is returned with
/// diagnostics.converged == false.
template <typename Scalar>
SolveResult<Scalar> solve_with_spread(const CostModel<Scalar>& model, const OptimizationConfig& config) {
    require(config.lambda >= 0.0, "risk aversion must be non-negative");
    require(config.tolerance > 0.0, "tolerance must be positive");
    const Index n = model.size();
    const Scalar total = static_cast<Scalar>(config.total);
    const Scalar lambda = static_cast<Scalar>(config.lambda);
    SolveResult<Scalar> result;
    if (total == Scalar(0)) {
        result.schedule = Schedule<Scalar>::Zero(n);
        result.diagnostics.path = SolverPath::Trivial;
        return result;
    }

    const auto prob = detail::normalize(model, total, lambda);
    const Scalar tol = static_cast<Scalar>(config.tolerance);

    auto best = detail::solve_l1_qp(prob.a, prob.d, Vector<Scalar>(Vector<Scalar>::Constant(n, Scalar(1) / n)), tol,
                                    config.max_iterations);
    if (config.extra_starts > 0) {
        std::mt19937_64 rng(config.seed);
        std::exponential_distribution<double> expo(1.0);
        for (int s = 0; s < config.extra_starts; ++s) {
            Vector<Scalar> start(n);
            for (Index k = 0; k < n; ++k) {
                start(k) = static_cast<Scalar>(expo(rng));
            }
            start /= start.sum();
            auto candidate = detail::solve_l1_qp(prob.a, prob.d, start, tol, config.max_iterations);
            if (detail::l1qp_value(prob.a, prob.d, candidate.u) < detail::l1qp_value(prob.a, prob.d, best.u)) {
                best = std::move(candidate);
            }
        }
    }

    result.schedule = best.u * total;
    result.diagnostics = detail::finish(model, result.schedule, total, lambda);
    result.diagnostics.iterations = best.iterations;
    result.diagnostics.outer_iterations = best.outer_iterations;
    result.diagnostics.stationarity = static_cast<double>(best.stationarity);
    result.diagnostics.path = best.active_set ? SolverPath::NumericalActiveSet : SolverPath::Numerical;
    result.diagnostics.converged = best.converged;
    return result;
}

/// Diagnostic variant: replaces |v_k| by sqrt(v_k^2 + eps), eps = 1e-12 X^2,
/// and runs equality-constrained Newton with continuation on eps.
template <typename Scalar>
SolveResult<Scalar> solve_smoothed(const CostModel<Scalar>& model, const OptimizationConfig& config) {
    require(config.lambda >= 0.0, "risk aversion must be non-negative");
    const Index n = model.size();
    const Scalar total = static_cast<Scalar>(config.total);
    const Scalar lambda = static_cast<Scalar>(config.lambda);
    SolveResult<Scalar> result;
    if (total == Scalar(0)) {
        result.schedule = Schedule<Scalar>::Zero(n);
        return result;
    }
    const auto prob = detail::normalize(model, total, lambda);
    using std::sqrt;
    Vector<Scalar> u = Vector<Scalar>::Constant(n, Scalar(1) / n);
    int iterations = 0;
    for (Scalar eps = Scalar(1e-2); eps >= Scalar(1e-12) * Scalar(0.999); eps /= Scalar(10)) {
        auto value = [&](const Vector<Scalar>& x) {
            return x.dot(prob.a * x) + prob.d * (x.array().square() + eps).sqrt().sum();
        };
        for (int it = 0; it < 200 && iterations < config.max_iterations; ++it, ++iterations) {
            const Vector<Scalar> root = (u.array().square() + eps).sqrt().matrix();
            const Vector<Scalar> g = Scalar(2) * (prob.a * u) + prob.d * u.cwiseQuotient(root);
            Matrix<Scalar> kkt = Matrix<Scalar>::Zero(n + 1, n + 1);
            kkt.topLeftCorner(n, n) = Scalar(2) * prob.a;
            kkt.topLeftCorner(n, n).diagonal().array() += prob.d * eps / root.array().cube();
            kkt.block(0, n, n, 1).setOnes();
            kkt.block(n, 0, 1, n).setOnes();
            Vector<Scalar> rhs = Vector<Scalar>::Zero(n + 1);
            rhs.head(n) = -g;
            rhs(n) = Scalar(1) - u.sum();
            const Vector<Scalar> step = kkt.partialPivLu().solve(rhs).head(n);
            const Scalar decrement = -g.dot(step);
            if (decrement <= Scalar(1e-16) * (Scalar(1) + value(u))) {
                break;
            }
            Scalar t = 1;
            const Scalar f0 = value(u);
            while (t > Scalar(1e-12) && value(u + t * step) > f0 - Scalar(1e-4) * t * decrement) {
                t /= 2;
            }
            u += t * step;
        }
    }
    result.schedule = u * total;
    result.diagnostics = detail::finish(model, result.schedule, total, lambda);
    result.diagnostics.iterations = iterations;
    result.diagnostics.path = SolverPath::Smoothed;
    result.diagnostics.stationarity = static_cast<double>(detail::l1qp_stationarity(prob.a, prob.d, u));
    return result;
}

template <typename Scalar = double>
struct FrontierPoint {
    double lambda = 0.0;
    /// (v'Iv + delta |v|_1) / |X|, bp.
    Scalar expected_cost{};
    Scalar impact_cost{};
    Scalar spread_cost{};
    /// v'Vv / X^2, bp^2.
    Scalar variance{};
    Schedule<Scalar> schedule;
    SolveDiagnostics diagnostics;
    std::optional<std::string> error;
};

template <typename Scalar>
FrontierPoint<Scalar> make_frontier_point(const CostModel<Scalar>& model, double lambda, Schedule<Scalar> v) {
    using std::abs;
    FrontierPoint<Scalar> p;
    p.lambda = lambda;
    const Scalar total = abs(v.sum());
    p.impact_cost = impact_cost(model, v) / total;
    p.spread_cost = spread_cost(model, v) / total;
    p.expected_cost = p.impact_cost + p.spread_cost;
    p.variance = cost_variance(model, v) / (total * total);
    p.schedule = std::move(v);
    return p;
}

/// One point per lambda (sorted ascending) from solve_with_spread. A failing
/// lambda is recorded in its point's `error` and the rest still run.
template <typename Scalar>
std::vector<FrontierPoint<Scalar>> efficient_frontier(const CostModel<Scalar>& model, Scalar total,
                                                      std::vector<double> lambdas,
                                                      const OptimizationConfig& base = {}) {
    require(!lambdas.empty(), "frontier needs at least one risk-aversion value");
    require(total != Scalar(0), "frontier needs a non-zero order size");
    for (double l : lambdas) {
        require(l >= 0.0, "risk aversion values must be non-negative");
    }
    std::sort(lambdas.begin(), lambdas.end());
    std::vector<FrontierPoint<Scalar>> points(lambdas.size());
    parallel_for(lambdas.size(), [&](std::size_t i) {
        OptimizationConfig config = base;
        config.lambda = lambdas[i];
        config.total = static_cast<double>(total);
        try {
            auto solved = solve_with_spread(model, config);
            points[i] = make_frontier_point(model, lambdas[i], std::move(solved.schedule));
            points[i].diagnostics = solved.diagnostics;
        } catch (const Error& e) {
            points[i].lambda = lambdas[i];
            points[i].error = std::string(to_string(e.kind())) + ": " + e.what();
        }
    });
    return points;
}

/// Almgren-Chriss schedules for each lambda, costed under `model`.
/// rho defaults to matched_temporary_impact(model); horizon is N intervals.
template <typename Scalar>
std::vector<FrontierPoint<Scalar>> almgren_chriss_frontier(const CostModel<Scalar>& model, Scalar total,
                                                           std::vector<double> lambdas,
                                                           std::optional<Scalar> rho = std::nullopt) {
    require(!lambdas.empty(), "frontier needs at least one risk-aversion value");
    require(total != Scalar(0), "frontier needs a non-zero order size");
    std::sort(lambdas.begin(), lambdas.end());
    const Scalar r = rho.value_or(matched_temporary_impact(model));
    const Index n = model.size();
    std::vector<FrontierPoint<Scalar>> points;
    points.reserve(lambdas.size());
    for (double l : lambdas) {
        auto v = almgren_chriss_schedule(total, n, static_cast<Scalar>(n), static_cast<Scalar>(l),
                                         model.noise_variance(), r);
        auto p = make_frontier_point(model, l, std::move(v));
        p.diagnostics = detail::finish(model, p.schedule, total, static_cast<Scalar>(l));
        p.diagnostics.path = SolverPath::AlmgrenChriss;
        points.push_back(std::move(p));
    }
    return points;
}

/// lo..hi log-spaced, `count` points, optionally prefixed with 0.
inline std::vector<double> log_lambda_grid(double lo, double hi, int count, bool include_zero) {
    require(lo > 0.0 && hi >= lo, "log grid needs 0 < lo <= hi");
    require(count >= 1, "log grid needs at least one point");
    std::vector<double> out;
    if (include_zero) {
        out.push_back(0.0);
    }
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        out.push_back(lo * std::pow(hi / lo, t));
    }
    return out;
}

/// Default grid: 0 plus 20 log-spaced values over [1e-8, 1e-2].
inline std::vector<double> default_lambda_grid() { return log_lambda_grid(1e-8, 1e-2, 20, true); }

}  // namespace texec
