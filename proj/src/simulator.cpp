#include "texec/simulator.hpp"

#include "texec/calibration.hpp"
#include "texec/errors.hpp"
#include "texec/parallel.hpp"

#include <cmath>
#include <random>

namespace texec {

namespace {

// 2024-01-01, so synthetic timestamps look like real ones
constexpr Timestamp kFirstSyntheticDay = 19'723;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double draw_magnitude(const MarketSpec& spec, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    if (spec.magnitude == MagnitudeLaw::Uniform) {
        return 1.0 - u;  // (0, 1]
    }
    // inverse CDF of m^-a on [floor, 1]
    const double a = spec.power_law_exponent;
    const double lo = spec.power_law_floor;
    if (std::abs(a - 1.0) < 1e-12) {
        return lo * std::pow(1.0 / lo, u);
    }
    const double e = 1.0 - a;
    return std::pow(std::pow(lo, e) + u * (1.0 - std::pow(lo, e)), 1.0 / e);
}

double draw_noise(const MarketSpec& spec, std::mt19937_64& rng) {
    if (spec.sigma_bp == 0.0) {
        return 0.0;
    }
    if (spec.noise == NoiseLaw::Gaussian) {
        return std::normal_distribution<double>(0.0, spec.sigma_bp)(rng);
    }
    const double nu = spec.student_dof;
    return spec.sigma_bp * std::sqrt((nu - 2.0) / nu) * std::student_t_distribution<double>(nu)(rng);
}

Timestamp synthetic_midnight(int day) {
    return (kFirstSyntheticDay + day) * kMicrosPerDay;
}

QuoteRecord quote_at(Timestamp ts, int day, double log_mid, double half_spread) {
    const double mid = std::exp(log_mid);
    return {ts, mid * (1.0 - half_spread), mid * (1.0 + half_spread), day};
}

/// Log mid before each interval of a day, plus the closing one.
std::vector<double> day_log_mids(const IntervalSeries& series, std::size_t begin, std::size_t end) {
    std::vector<double> p;
    for (std::size_t i = begin; i < end; ++i) {
        p.push_back(series.intervals[i].p_open);
    }
    p.push_back(series.intervals[end - 1].p_open + series.intervals[end - 1].r);
    return p;
}

}  // namespace

void MarketSpec::validate() const {
    require(theta_bp >= 0.0 && std::isfinite(theta_bp), "theta must be finite and non-negative");
    require(sigma_bp >= 0.0 && std::isfinite(sigma_bp), "sigma must be finite and non-negative");
    require(volume > 0.0, "volume per interval must be positive");
    require(persistence >= 0.0 && persistence < 1.0, "sign persistence must lie in [0, 1)");
    require(power_law_floor > 0.0 && power_law_floor < 1.0, "power-law floor must lie in (0, 1)");
    require(noise != NoiseLaw::StudentT || student_dof > 4.0, "Student-t noise needs more than 4 degrees of freedom");
    require(intervals_per_day >= 1, "intervals per day must be >= 1");
    require(days >= 1, "days must be >= 1");
    require(initial_price > 0.0, "initial price must be positive");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

std::vector<std::vector<double>> simulate_imbalances(const MarketSpec& spec) {
    spec.validate();
    const std::uint64_t base = derive_seed(spec.seed, 0);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(spec.days));
    parallel_for(out.size(), [&](std::size_t day) {
        std::mt19937_64 rng(derive_seed(base, day));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        auto& v = out[day];
        v.resize(static_cast<std::size_t>(spec.intervals_per_day));
        int sign = unit(rng) < 0.5 ? -1 : 1;
        for (std::size_t n = 0; n < v.size(); ++n) {
            if (n > 0 && unit(rng) >= spec.persistence) {
                sign = unit(rng) < 0.5 ? -1 : 1;
            }
            v[n] = sign * draw_magnitude(spec, rng);
        }
    });
    return out;
}

IntervalSeries simulate_from_imbalances(const MarketSpec& spec, const std::vector<std::vector<double>>& imbalances) {
    spec.validate();
    const std::uint64_t base = derive_seed(spec.seed, 1);
    std::size_t longest = 0;
    for (const auto& day : imbalances) {
        longest = std::max(longest, day.size());
        for (double x : day) {
            require(std::abs(x) <= 1.0, "normalized imbalances must lie in [-1, 1]");
        }
    }
    const Eigen::VectorXd g0 = spec.kernel.values(static_cast<Index>(longest));
    std::vector<std::vector<Interval>> days(imbalances.size());
    parallel_for(imbalances.size(), [&](std::size_t d) {
        std::mt19937_64 rng(derive_seed(base, d));
        const auto& v = imbalances[d];
        auto& rows = days[d];
        rows.resize(v.size());
        double p = std::log(spec.initial_price);
        for (std::size_t n = 0; n < v.size(); ++n) {
            double r = draw_noise(spec, rng);
            for (std::size_t k = 0; k <= n; ++k) {
                r += (g0(static_cast<Index>(k) + 1) - g0(static_cast<Index>(k))) * spec.theta_bp * v[n - k];
            }
            Interval& iv = rows[n];
            iv.day_id = static_cast<int>(d);
            iv.index = static_cast<int>(n);
            iv.p_open = p;
            iv.r = r / kBasisPoints;
            iv.v_nor = v[n];
            iv.v = v[n] * spec.volume;
            iv.W = spec.volume;
            p += iv.r;
        }
    });
    IntervalSeries series;
    series.scheme = spec.scheme;
    for (auto& rows : days) {
        series.intervals.insert(series.intervals.end(), rows.begin(), rows.end());
    }
    return series;
}

IntervalSeries simulate_market(const MarketSpec& spec) {
    return simulate_from_imbalances(spec, simulate_imbalances(spec));
}

MarketTape simulate_real_time_tape(const MarketSpec& spec, double half_spread_bp, const Session& session) {
    const auto* rt = std::get_if<RealTime>(&spec.scheme);
    require(rt != nullptr, "real-time tape needs a real-time scheme");
    const auto tau = static_cast<Timestamp>(std::llround(rt->interval_seconds * kMicrosPerSecond));
    require(tau >= 3, "interval too short for a tape");
    require(tau * spec.intervals_per_day <= session.length(), "intervals do not fit in the session");
    require(half_spread_bp >= 0.0 && half_spread_bp < kBasisPoints, "half spread must lie in [0, 1e4) bp");
    const double delta = half_spread_bp / kBasisPoints;

    MarketTape tape;
    tape.truth = simulate_market(spec);
    for (const auto& [b, e] : tape.truth.day_ranges()) {
        const int day = tape.truth.intervals[b].day_id;
        const Timestamp open = synthetic_midnight(day) + session.open;
        const std::vector<double> p = day_log_mids(tape.truth, b, e);
        for (std::size_t n = 0; n < p.size(); ++n) {
            const Timestamp start = open + static_cast<Timestamp>(n) * tau;
            tape.quotes.push_back(quote_at(start - 1, day, p[n], delta));
            if (n + 1 == p.size()) {
                break;
            }
            const QuoteRecord& q = tape.quotes.back();
            const Interval& iv = tape.truth.intervals[b + n];
            const double buy = 0.5 * (iv.W + iv.v);
            const double sell = 0.5 * (iv.W - iv.v);
            if (buy > 1e-9 * iv.W) {
                tape.trades.push_back({start + tau / 3, q.ask, buy, day, std::nullopt});
            }
            if (sell > 1e-9 * iv.W) {
                tape.trades.push_back({start + 2 * tau / 3, q.bid, sell, day, std::nullopt});
            }
        }
    }
    return tape;
}

MarketTape simulate_trade_tape(const MarketSpec& spec, double half_spread_bp, const Session& session) {
    require(half_spread_bp >= 0.0 && half_spread_bp < kBasisPoints, "half spread must lie in [0, 1e4) bp");
    const Timestamp step = session.length() / (spec.intervals_per_day + 1);
    require(step >= 3, "too many transactions for the session");
    const double delta = half_spread_bp / kBasisPoints;

    MarketTape tape;
    tape.truth = simulate_market(spec);
    for (const auto& [b, e] : tape.truth.day_ranges()) {
        const int day = tape.truth.intervals[b].day_id;
        const Timestamp open = synthetic_midnight(day) + session.open;
        const std::vector<double> p = day_log_mids(tape.truth, b, e);
        Timestamp ts = open;
        for (std::size_t n = 0; n + 1 < p.size(); ++n) {
            ts = open + static_cast<Timestamp>(n + 1) * step;
            tape.quotes.push_back(quote_at(ts - 1, day, p[n], delta));
            const QuoteRecord& q = tape.quotes.back();
            const Interval& iv = tape.truth.intervals[b + n];
            tape.trades.push_back({ts, iv.v > 0.0 ? q.ask : q.bid, std::abs(iv.v), day, std::nullopt});
        }
        tape.quotes.push_back(quote_at(ts + 1, day, p.back(), delta));
    }
    return tape;
}

ExecutionSimulation simulate_execution(const CostModel<double>& model, const Schedule<double>& schedule,
                                       const ExecutionOptions& options) {
    require(options.paths >= 2, "Monte Carlo needs at least 2 paths");
    const Index n = model.size();
    require(schedule.size() == n, "schedule length must match the cost model");

    // effective propagator straight from the kernel
    const auto& kernel = model.kernel();
    std::vector<double> gt(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) {
        gt[static_cast<std::size_t>(k)] = k == 0 ? 0.5 * kernel(1) : 0.5 * (kernel(k) + kernel(k + 1));
    }
    double deterministic = 0.0;
    for (Index i = 0; i < n; ++i) {
        double price = 0.0;
        for (Index k = 0; k <= i; ++k) {
            price += model.theta_per_share()(k) * schedule(k) * gt[static_cast<std::size_t>(i - k)];
        }
        deterministic += schedule(i) * price + model.half_spread() * std::abs(schedule(i));
    }

    // noise weight of eta_k: volume traded after (or from) interval k
    std::vector<double> weight(static_cast<std::size_t>(n));
    double tail = 0.0;
    for (Index k = n - 1; k >= 0; --k) {
        if (options.convention == NoiseConvention::Inclusive) {
            tail += schedule(k);
            weight[static_cast<std::size_t>(k)] = tail;
        } else {
            weight[static_cast<std::size_t>(k)] = tail;
            tail += schedule(k);
        }
    }

    const double sigma = std::sqrt(model.noise_variance());
    std::vector<double> costs(options.paths);
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (options.paths + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t c) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t path = c * kChunk; path < std::min(options.paths, (c + 1) * kChunk); ++path) {
            std::mt19937_64 rng(derive_seed(options.seed, path));
            double noise = 0.0;
            if (sigma > 0.0) {
                for (double w : weight) {
                    noise += w * normal(rng);
                }
                normal.reset();
            }
            costs[path] = deterministic + sigma * noise;
        }
    });

    ExecutionSimulation out;
    out.paths = options.paths;
    out.deterministic_cost = deterministic;
    const auto count = static_cast<double>(options.paths);
    double sum = 0.0;
    for (double c : costs) {
        sum += c;
    }
    out.mean = sum / count;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double c : costs) {
        const double d = c - out.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    out.variance = m2 / (count - 1.0);
    m4 /= count;
    out.mean_se = std::sqrt(out.variance / count);
    const double var_of_var = (m4 - out.variance * out.variance * (count - 3.0) / (count - 1.0)) / count;
    out.variance_se = std::sqrt(std::max(var_of_var, 0.0));
    if (options.keep_samples) {
        out.samples = std::move(costs);
    }
    return out;
}

}  // namespace texec
