#pragma once

// Synthetic markets obeying the propagator model, and Monte Carlo costing of
// execution schedules.

#include "texec/impact_model.hpp"
#include "texec/market_data.hpp"

#include <cstdint>
#include <vector>

namespace texec {

enum class MagnitudeLaw { Uniform, PowerLaw };
enum class NoiseLaw { Gaussian, StudentT };

struct MarketSpec {
    double theta_bp = 15.4;
    PropagatorKernel<double> kernel = PropagatorKernel<double>::parametric(1.40, 20.0, 0.190);
    /// Noise standard deviation per interval, bp.
    double sigma_bp = 18.7;
    /// Total volume per interval, shares.
    double volume = 10'000.0;
    /// Probability of repeating the previous sign; 0 gives IID signs.
    double persistence = 0.0;
    MagnitudeLaw magnitude = MagnitudeLaw::Uniform;
    /// Density proportional to m^-exponent on [floor, 1].
    double power_law_exponent = 2.5;
    double power_law_floor = 0.01;
    NoiseLaw noise = NoiseLaw::Gaussian;
    double student_dof = 5.0;
    int intervals_per_day = 102;
    int days = 1;
    std::uint64_t seed = 1;
    /// Clock recorded on the generated series.
    AggregationScheme scheme = RealTime{};
    /// Initial price level, currency.
    double initial_price = 100.0;

    void validate() const;
};

/// One mt19937_64 seed per (seed, stream) pair.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Per-day normalized imbalances in [-1, 1] drawn from the spec's sign and
/// magnitude processes.
std::vector<std::vector<double>> simulate_imbalances(const MarketSpec& spec);

/// Builds the series for given imbalances: r_n = sum_k g(k) theta v_nor(n-k) + eta_n
/// (bp, stored as log returns), v_n = v_nor W, W_n = W. Days are independent.
IntervalSeries simulate_from_imbalances(const MarketSpec& spec, const std::vector<std::vector<double>>& imbalances);

IntervalSeries simulate_market(const MarketSpec& spec);

struct MarketTape {
    std::vector<TradeRecord> trades;
    std::vector<QuoteRecord> quotes;
    /// The series the tape was generated from.
    IntervalSeries truth;
};

/// Trade and quote tape for a real-time spec. Each interval carries one buy
/// trade at the ask and one sell trade at the bid splitting W, and a quote one
/// microsecond before its start with mid exp(p_n) and half-spread delta.
MarketTape simulate_real_time_tape(const MarketSpec& spec, double half_spread_bp, const Session& session = {});

/// One transaction per interval of the spec (size |v_nor| W), each preceded
/// by a quote at the current mid. Suited to trade-time aggregation.
MarketTape simulate_trade_tape(const MarketSpec& spec, double half_spread_bp, const Session& session = {});

enum class NoiseConvention {
    /// eta_k reaches the effective price of interval n only for n > k.
    StrictlyAfter,
    /// eta_k also reaches interval k itself.
    Inclusive,
};

struct ExecutionSimulation {
    std::size_t paths = 0;
    double mean = 0.0;
    double variance = 0.0;
    double mean_se = 0.0;
    double variance_se = 0.0;
    /// Deterministic part of every path (impact plus spread), bp shares.
    double deterministic_cost = 0.0;
    /// Per-path costs when requested.
    std::vector<double> samples;
};

struct ExecutionOptions {
    std::size_t paths = 100'000;
    std::uint64_t seed = 1;
    NoiseConvention convention = NoiseConvention::StrictlyAfter;
    bool keep_samples = false;
};

/// Realized cost sum_n v_n (pt_n - p_0) + delta sum |v_n| per path, with
/// Gaussian noise of the model's variance. Impact is convolved from the
/// model's kernel directly.
ExecutionSimulation simulate_execution(const CostModel<double>& model, const Schedule<double>& schedule,
                                       const ExecutionOptions& options = {});

}  // namespace texec
