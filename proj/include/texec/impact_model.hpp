#pragma once

// Transient-impact cost model.
//
// Prices follow p_n = p_0 + sum_{k<n} [eta_k + f(v_k) G0(n - k)] with a linear
// per-interval impact f(v_k) = theta_k v_k, theta_k = theta / W_k. Trading at
// the average of the two interval end prices replaces G0 by the effective
// propagator Gt, so the expected fractional cost of a schedule v is
//
//     E[c] = v' I v + delta * sum |v_k|,   I_ij = theta_j Gt(i - j)  (i >= j)
//
// and its variance is v' V v with V_ij = sigma^2 min(i, j). Costs are in basis
// points times shares; variances in bp^2 times shares^2.

#include "texec/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace texec {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Signed volume per interval, in shares. Sum is the parent order size X.
template <typename Scalar>
using Schedule = Vector<Scalar>;

/// Decaying impact kernel G0(k): zero at k = 0, positive afterwards.
template <typename Scalar = double>
class PropagatorKernel {
public:
    /// G0(l) = gamma0 / (l0^2 + l^2)^(beta / 2)
    struct Parametric {
        Scalar gamma0;
        Scalar l0;
        Scalar beta;
    };

    /// G0(1..K) from a table; lags past K hold the last value.
    struct Tabulated {
        std::vector<Scalar> values;
    };

    static PropagatorKernel parametric(Scalar gamma0, Scalar l0, Scalar beta) {
        require(gamma0 > Scalar(0), "kernel amplitude must be positive");
        require(l0 >= Scalar(0), "kernel l0 must be non-negative");
        require(beta >= Scalar(0) && beta < Scalar(2), "kernel beta must lie in [0, 2)");
        return PropagatorKernel(Parametric{gamma0, l0, beta});
    }

    static PropagatorKernel tabulated(std::vector<Scalar> values) {
        require(!values.empty(), "tabulated kernel needs at least one value");
        for (const Scalar& x : values) {
            require(std::isfinite(static_cast<double>(x)), "tabulated kernel values must be finite");
        }
        return PropagatorKernel(Tabulated{std::move(values)});
    }

    Scalar operator()(Index lag) const {
        if (lag <= 0) {
            return Scalar(0);
        }
        if (const auto* p = std::get_if<Parametric>(&repr_)) {
            using std::pow;
            const Scalar l = static_cast<Scalar>(lag);
            return p->gamma0 / pow(p->l0 * p->l0 + l * l, p->beta / Scalar(2));
        }
        const auto& table = std::get<Tabulated>(repr_).values;
        const auto i = std::min<std::size_t>(static_cast<std::size_t>(lag), table.size());
        return table[i - 1];
    }

    /// G0(0), ..., G0(n).
    Vector<Scalar> values(Index n) const {
        Vector<Scalar> out(n + 1);
        for (Index k = 0; k <= n; ++k) {
            out(k) = (*this)(k);
        }
        return out;
    }

    bool is_parametric() const { return std::holds_alternative<Parametric>(repr_); }

    const Parametric* parameters() const { return std::get_if<Parametric>(&repr_); }

    const std::vector<Scalar>* table() const {
        if (const auto* t = std::get_if<Tabulated>(&repr_)) {
            return &t->values;
        }
        return nullptr;
    }

    template <typename Other>
    PropagatorKernel<Other> cast() const {
        if (const auto* p = parameters()) {
            return PropagatorKernel<Other>::parametric(Other(p->gamma0), Other(p->l0), Other(p->beta));
        }
        std::vector<Other> t;
        for (const Scalar& x : *table()) {
            t.push_back(Other(x));
        }
        return PropagatorKernel<Other>::tabulated(std::move(t));
    }

private:
    explicit PropagatorKernel(std::variant<Parametric, Tabulated> repr) : repr_(std::move(repr)) {}

    std::variant<Parametric, Tabulated> repr_;
};

/// Gt(0) = G0(1)/2 and Gt(k) = (G0(k) + G0(k+1))/2 for k >= 1, k < n.
template <typename Scalar>
Vector<Scalar> effective_propagator(const PropagatorKernel<Scalar>& kernel, Index n) {
    require(n >= 1, "effective propagator needs n >= 1");
    Vector<Scalar> g(n);
    for (Index k = 0; k < n; ++k) {
        g(k) = (kernel(k) + kernel(k + 1)) / Scalar(2);
    }
    return g;
}

/// sigma^2 * min(i, j); first row and column are zero.
template <typename Scalar>
Matrix<Scalar> variance_matrix(Scalar sigma2, Index n) {
    Matrix<Scalar> v(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            v(i, j) = sigma2 * static_cast<Scalar>(std::min(i, j));
        }
    }
    return v;
}

/// Outcome of a pivoted LDL' factorization used as a positive-definiteness test.
struct DefinitenessCheck {
    bool positive_definite = false;
    double min_pivot = 0.0;
    double max_pivot = 0.0;
};

/// Symmetric matrix is accepted when every LDL' pivot is positive and the
/// smallest exceeds 1e-12 times the largest.
template <typename Derived>
DefinitenessCheck check_positive_definite(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    Eigen::LDLT<Matrix<Scalar>> ldlt(m);
    DefinitenessCheck out;
    if (ldlt.info() != Eigen::Success || m.rows() == 0) {
        return out;
    }
    const auto d = ldlt.vectorD();
    out.min_pivot = static_cast<double>(d.minCoeff());
    out.max_pivot = static_cast<double>(d.maxCoeff());
    out.positive_definite = out.max_pivot > 0.0 && out.min_pivot > 1e-12 * out.max_pivot;
    return out;
}

template <typename Scalar = double>
class CostModel {
public:
    Index size() const { return impact_.rows(); }

    /// Lower-triangular I.
    const Matrix<Scalar>& impact_matrix() const { return impact_; }
    /// (I + I') / 2.
    const Matrix<Scalar>& symmetric_impact() const { return symmetric_; }
    const Matrix<Scalar>& variance_matrix() const { return variance_; }
    const Vector<Scalar>& effective_propagator() const { return effective_; }
    const Vector<Scalar>& theta_per_share() const { return theta_k_; }
    const Vector<Scalar>& market_volume() const { return volume_; }
    const PropagatorKernel<Scalar>& kernel() const { return kernel_; }

    Scalar theta() const { return theta_; }
    Scalar noise_variance() const { return sigma2_; }
    Scalar half_spread() const { return delta_; }
    const DefinitenessCheck& definiteness() const { return definiteness_; }

    /// Copy with a different spread, e.g. to solve the spread-free problem.
    CostModel with_half_spread(Scalar delta) const {
        require(delta >= Scalar(0), "half spread must be non-negative");
        CostModel out = *this;
        out.delta_ = delta;
        return out;
    }

    template <typename S>
    friend CostModel<S> build_cost_model(const PropagatorKernel<S>&, S, const Vector<S>&, S, S, Index);

private:
    explicit CostModel(PropagatorKernel<Scalar> kernel) : kernel_(std::move(kernel)) {}

    PropagatorKernel<Scalar> kernel_;
    Matrix<Scalar> impact_;
    Matrix<Scalar> symmetric_;
    Matrix<Scalar> variance_;
    Vector<Scalar> effective_;
    Vector<Scalar> theta_k_;
    Vector<Scalar> volume_;
    Scalar theta_{};
    Scalar sigma2_{};
    Scalar delta_{};
    DefinitenessCheck definiteness_;
};

/// Assembles I, V and the spread term for an N-interval schedule.
/// `volume` holds W_k (size N) or a single constant W.
/// Throws NonConvexImpactMatrix when (I + I')/2 is not positive definite.
template <typename Scalar>
CostModel<Scalar> build_cost_model(const PropagatorKernel<Scalar>& kernel, Scalar theta_bp,
                                   const Vector<Scalar>& volume, Scalar sigma2, Scalar delta, Index n) {
    require(n >= 1, "cost model needs n >= 1");
    require(theta_bp >= Scalar(0), "theta must be non-negative");
    require(sigma2 >= Scalar(0), "noise variance must be non-negative");
    require(delta >= Scalar(0), "half spread must be non-negative");
    require(volume.size() == 1 || volume.size() == n, "market volume must be scalar or have length N");

    CostModel<Scalar> model(kernel);
    model.volume_ = volume.size() == 1 ? Vector<Scalar>::Constant(n, volume(0)) : volume;
    for (Index k = 0; k < n; ++k) {
        require(model.volume_(k) > Scalar(0), "market volume W_k must be positive");
    }
    model.theta_ = theta_bp;
    model.sigma2_ = sigma2;
    model.delta_ = delta;
    model.theta_k_ = model.volume_.cwiseInverse() * theta_bp;
    model.effective_ = effective_propagator(kernel, n);

    model.impact_ = Matrix<Scalar>::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = j; i < n; ++i) {
            model.impact_(i, j) = model.theta_k_(j) * model.effective_(i - j);
        }
    }
    model.symmetric_ = (model.impact_ + model.impact_.transpose()) / Scalar(2);
    model.variance_ = variance_matrix(sigma2, n);

    if (theta_bp > Scalar(0)) {
        model.definiteness_ = check_positive_definite(model.symmetric_);
        if (!model.definiteness_.positive_definite) {
            fail(ErrorKind::NonConvexImpactMatrix,
                 "symmetrized impact matrix is not positive definite (min pivot " +
                     std::to_string(model.definiteness_.min_pivot) + ", max pivot " +
                     std::to_string(model.definiteness_.max_pivot) +
                     "); the kernel admits price manipulation");
        }
    }
    return model;
}

template <typename Scalar>
CostModel<Scalar> build_cost_model(const PropagatorKernel<Scalar>& kernel, Scalar theta_bp, Scalar volume,
                                   Scalar sigma2, Scalar delta, Index n) {
    return build_cost_model(kernel, theta_bp, Vector<Scalar>(Vector<Scalar>::Constant(1, volume)), sigma2, delta, n);
}

namespace detail {
template <typename Scalar, typename Derived>
void check_length(const CostModel<Scalar>& model, const Eigen::MatrixBase<Derived>& v) {
    require(v.size() == model.size(), "schedule length does not match the cost model");
}
}  // namespace detail

/// v' I v (bp * shares).
template <typename Scalar, typename Derived>
Scalar impact_cost(const CostModel<Scalar>& model, const Eigen::MatrixBase<Derived>& v) {
    detail::check_length(model, v);
    return v.dot(model.impact_matrix().template triangularView<Eigen::Lower>() * v);
}

/// delta * sum |v_k| (bp * shares).
template <typename Scalar, typename Derived>
Scalar spread_cost(const CostModel<Scalar>& model, const Eigen::MatrixBase<Derived>& v) {
    detail::check_length(model, v);
    return model.half_spread() * v.template lpNorm<1>();
}

/// v' V v (bp^2 * shares^2).
template <typename Scalar, typename Derived>
Scalar cost_variance(const CostModel<Scalar>& model, const Eigen::MatrixBase<Derived>& v) {
    detail::check_length(model, v);
    return v.dot(model.variance_matrix() * v);
}

/// E[c] + lambda Var[c].
template <typename Scalar, typename Derived>
Scalar objective(const CostModel<Scalar>& model, const Eigen::MatrixBase<Derived>& v, Scalar lambda) {
    require(lambda >= Scalar(0), "risk aversion must be non-negative");
    return impact_cost(model, v) + lambda * cost_variance(model, v) + spread_cost(model, v);
}

template <typename Scalar = double>
struct CostReport {
    Scalar expected_impact_cost{};
    Scalar expected_spread_cost{};
    Scalar variance{};
    /// Per-share costs in bp; empty when sum(v) == 0 (ZeroTotalVolume).
    std::optional<Scalar> fractional_impact;
    std::optional<Scalar> fractional_spread;
    Scalar lambda{};
    Scalar objective{};

    Scalar expected_cost() const { return expected_impact_cost + expected_spread_cost; }
};

template <typename Scalar, typename Derived>
CostReport<Scalar> cost_report(const CostModel<Scalar>& model, const Eigen::MatrixBase<Derived>& v,
                               Scalar lambda = Scalar(0)) {
    require(lambda >= Scalar(0), "risk aversion must be non-negative");
    CostReport<Scalar> r;
    r.expected_impact_cost = impact_cost(model, v);
    r.expected_spread_cost = spread_cost(model, v);
    r.variance = cost_variance(model, v);
    r.lambda = lambda;
    r.objective = r.expected_impact_cost + lambda * r.variance + r.expected_spread_cost;
    using std::abs;
    const Scalar total = abs(v.sum());
    if (total > Scalar(0)) {
        r.fractional_impact = r.expected_impact_cost / total;
        r.fractional_spread = r.expected_spread_cost / total;
    }
    return r;
}

/// x_k = v_k / W_k.
template <typename DerivedV, typename DerivedW>
Vector<typename DerivedV::Scalar> to_participation(const Eigen::MatrixBase<DerivedV>& v,
                                                   const Eigen::MatrixBase<DerivedW>& volume) {
    using Scalar = typename DerivedV::Scalar;
    require(v.size() == volume.size(), "schedule and market volume lengths differ");
    Vector<Scalar> x(v.size());
    for (Index k = 0; k < v.size(); ++k) {
        if (volume(k) == Scalar(0)) {
            if (v(k) != Scalar(0)) {
                fail(ErrorKind::InfeasibleParticipation,
                     "interval " + std::to_string(k) + " has zero market volume but non-zero trading");
            }
            x(k) = Scalar(0);
        } else {
            x(k) = v(k) / volume(k);
        }
    }
    return x;
}

}  // namespace texec
