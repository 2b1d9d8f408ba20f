#pragma once

// Estimation of the impact function, the propagator kernel, the noise level
// and the half-spread from interval data. Returns are handled in basis points
// throughout (log return * 1e4).

#include "texec/impact_model.hpp"
#include "texec/market_data.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace texec {

inline constexpr double kBasisPoints = 1e4;

enum class ImpactForm { Linear, Arctan };

std::string to_string(ImpactForm form);

struct ImpactBin {
    /// Mean regressor value in the bin.
    double center = 0.0;
    double mean_return_bp = 0.0;
    double std_error_bp = 0.0;
    std::size_t count = 0;
};

/// f(x) = theta x on normalized imbalance (linear) or theta atan(rho x) on raw
/// signed volume (arctan). Both are odd by construction.
struct ImpactFunctionFit {
    ImpactForm form = ImpactForm::Linear;
    double theta_bp = 0.0;
    double theta_se = 0.0;
    /// Inverse volume scale, 1/shares (arctan only).
    double rho = 0.0;
    double rho_se = 0.0;
    std::vector<ImpactBin> bins;
    std::vector<std::string> warnings;

    /// The regressor the form is defined on: v_nor (linear) or v (arctan).
    double regressor(const Interval& iv) const;
    double evaluate(double x) const;
    double operator()(const Interval& iv) const { return evaluate(regressor(iv)); }
};

ImpactFunctionFit estimate_impact_function(const IntervalSeries& series, int n_bins = 30,
                                           ImpactForm form = ImpactForm::Linear);

struct EmpiricalPropagator {
    /// g(k) = G0(k+1) - G0(k), k = 0 .. max_lag-1.
    Eigen::VectorXd g;
    /// Cumulative sums, size max_lag + 1, table(0) = 0.
    Eigen::VectorXd table;
    Eigen::MatrixXd covariance;
    int max_lag = 0;
    /// Lags of same-day history each regression row requires (>= max_lag - 1).
    int history = 0;
    std::size_t rows = 0;
    double condition_number = 0.0;
    double ss_res = 0.0;
    double ss_tot = 0.0;

    Eigen::VectorXd g_std_errors() const { return covariance.diagonal().cwiseMax(0.0).cwiseSqrt(); }

    /// Covariance of table(1..max_lag).
    Eigen::MatrixXd table_covariance() const;
};

/// OLS of r_j on f(x_{j-k}), k < max_lag, without intercept. Rows need
/// `history` lags within the same day; by default history = max_lag - 1.
EmpiricalPropagator regress_propagator(const IntervalSeries& series, const ImpactFunctionFit& impact,
                                       int max_lag = 50, std::optional<int> history = std::nullopt);

struct KernelFit {
    double gamma0 = 0.0;
    double l0 = 0.0;
    double beta = 0.0;
    double residual_norm = 0.0;
    double gamma0_se = 0.0;
    double l0_se = 0.0;
    double beta_se = 0.0;
    /// RMS residual exceeds 10% of the RMS of the fitted table.
    bool poor_fit = false;

    PropagatorKernel<double> kernel() const { return PropagatorKernel<double>::parametric(gamma0, l0, beta); }
};

/// Least-squares fit of gamma0 / (l0^2 + l^2)^(beta/2) to table(1..max_lag):
/// grid multi-start over (l0, beta) with the amplitude projected out, then
/// Levenberg-Marquardt on all three parameters.
KernelFit fit_kernel(const EmpiricalPropagator& emp);

/// Residuals of the fitted regression on its own rows, in bp.
Eigen::VectorXd regression_residuals(const IntervalSeries& series, const ImpactFunctionFit& impact,
                                     const EmpiricalPropagator& emp);

/// 1 - SS_res / SS_tot (centered), clamped to [0, 1].
double r_squared(const IntervalSeries& series, const ImpactFunctionFit& impact, const EmpiricalPropagator& emp);

struct NoiseEstimate {
    double sigma2_bp2 = 0.0;
    std::size_t samples = 0;
};

NoiseEstimate estimate_noise_variance(const IntervalSeries& series, const ImpactFunctionFit& impact,
                                      const EmpiricalPropagator& emp);

struct SpreadEstimate {
    double delta_bp = 0.0;
    std::size_t quotes_used = 0;
    std::size_t crossed_quotes = 0;
};

/// Time-weighted (A - B)/(A + B) over the session. Each quote holds until the
/// next one of its day, the last one until the close. Crossed quotes are
/// excluded and counted.
SpreadEstimate estimate_spread(const std::vector<QuoteRecord>& quotes, const Session& session = {});

struct CalibrationOptions {
    int n_bins = 30;
    ImpactForm form = ImpactForm::Linear;
    int max_lag = 50;
};

struct CalibratedModel {
    ImpactFunctionFit impact;
    EmpiricalPropagator propagator;
    KernelFit kernel_fit;
    double sigma2_bp2 = 0.0;
    double delta_bp = 0.0;
    double r_squared = 0.0;
    AggregationScheme scheme = RealTime{};
    /// Mean total volume per interval, shares.
    double mean_volume = 0.0;
    int intervals_per_day = 0;
    std::size_t intervals = 0;

    PropagatorKernel<double> kernel() const { return kernel_fit.kernel(); }
    PropagatorKernel<double> tabulated_kernel() const;

    /// theta of the equivalent linear impact on normalized imbalance. For the
    /// arctan form this is the slope at zero, theta * rho * mean_volume.
    double linear_theta_bp() const;
};

CalibratedModel calibrate(const IntervalSeries& series, const SpreadEstimate& spread,
                          const CalibrationOptions& options = {});

}  // namespace texec
