#pragma once

#include "texec/errors.hpp"
#include "texec/impact_model.hpp"

#include <random>
#include <stdexcept>

namespace texec::testing {

/// Parameters of the four calibrated stocks (5-minute real-time fits).
struct StockParams {
    const char* name;
    double theta_bp;
    double gamma0;
    double l0;
    double beta;
    double delta_bp;
    double sigma2_bp2;
    int intervals;
};

inline constexpr StockParams kAzn{"AZN", 15.4, 1.40, 20.0, 0.190, 5.27, 350.81, 102};
inline constexpr StockParams kVod{"VOD", 26.0, 1.07, 4.0, 0.075, 10.12, 764.52, 102};
inline constexpr StockParams kAapl{"AAPL", 21.9, 1.01, 0.41, 0.23, 0.52, 195.95, 78};
inline constexpr StockParams kAmzn{"AMZN", 26.9, 1.05, 0.70, 0.23, 1.47, 395.62, 78};
inline constexpr StockParams kStocks[] = {kAzn, kVod, kAapl, kAmzn};

inline constexpr double kVolume = 10'000.0;

inline PropagatorKernel<double> kernel_of(const StockParams& s) {
    return PropagatorKernel<double>::parametric(s.gamma0, s.l0, s.beta);
}

inline CostModel<double> stock_model(const StockParams& s, double delta = -1.0) {
    return build_cost_model(kernel_of(s), s.theta_bp, kVolume, s.sigma2_bp2, delta < 0.0 ? s.delta_bp : delta,
                            static_cast<Index>(s.intervals));
}

/// One percent of the horizon's market volume.
inline double one_percent(const CostModel<double>& m) { return 0.01 * m.market_volume().sum(); }

/// Random convex model: parametric kernel, constant W, sigma2, delta. Draws
/// that fail the definiteness check are redrawn. Per-interval volume profiles
/// are not drawn: almost every non-constant profile makes the symmetrized
/// impact matrix indefinite.
inline CostModel<double> random_model(std::mt19937_64& rng, Index n, double delta_bp) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int attempt = 0; attempt < 1'000; ++attempt) {
        const double gamma0 = 0.5 + 1.5 * u(rng);
        const double l0 = 20.0 * u(rng);
        const double beta = 0.05 + 1.0 * u(rng);
        const double theta = 5.0 + 25.0 * u(rng);
        const double w = 5'000.0 + 10'000.0 * u(rng);
        const double sigma2 = 100.0 + 700.0 * u(rng);
        try {
            return build_cost_model(PropagatorKernel<double>::parametric(gamma0, l0, beta), theta, w, sigma2,
                                    delta_bp, n);
        } catch (const Error&) {
        }
    }
    throw std::runtime_error("no convex random model found");
}

}  // namespace texec::testing
