#pragma once

// Trade/quote ingestion, Lee-Ready trade signing, and aggregation of signed
// trades into interval series under real-time or (aggregated) trade-time
// clocks.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace texec {

/// Microseconds since the Unix epoch.
using Timestamp = std::int64_t;

inline constexpr Timestamp kMicrosPerSecond = 1'000'000;
inline constexpr Timestamp kMicrosPerDay = 86'400 * kMicrosPerSecond;

struct TradeRecord {
    Timestamp timestamp = 0;
    double price = 0.0;
    double size = 0.0;
    int day_id = 0;
    /// +1 buyer-initiated, -1 seller-initiated, empty when unknown.
    std::optional<int> side;
};

struct QuoteRecord {
    Timestamp timestamp = 0;
    double bid = 0.0;
    double ask = 0.0;
    int day_id = 0;

    double mid() const { return 0.5 * (bid + ask); }
};

struct SignedTrade {
    Timestamp timestamp = 0;
    /// Shares; the sign is the initiator side.
    double signed_volume = 0.0;
    double price = 0.0;
    int day_id = 0;
};

struct MidPoint {
    Timestamp timestamp = 0;
    double log_mid = 0.0;
    int day_id = 0;
};

struct RealTime {
    double interval_seconds = 300.0;
};
struct TradeTime {};
struct AggregatedTradeTime {
    int trades_per_unit = 1;
};

/// TradeTime behaves exactly like AggregatedTradeTime{1}.
using AggregationScheme = std::variant<RealTime, TradeTime, AggregatedTradeTime>;

std::string describe(const AggregationScheme& scheme);

/// Trades per unit for trade-time clocks; empty for real time.
std::optional<int> trades_per_unit(const AggregationScheme& scheme);

/// Continuous trading session, as microsecond offsets from the day's midnight (UTC).
struct Session {
    Timestamp open = 8 * 3600 * kMicrosPerSecond;
    Timestamp close = (16 * 3600 + 30 * 60) * kMicrosPerSecond;

    Timestamp length() const { return close - open; }
};

/// Midnight (UTC) of the day containing `t`.
Timestamp day_start(Timestamp t);

struct Interval {
    int day_id = 0;
    int index = 0;
    /// Log mid right before the interval starts.
    double p_open = 0.0;
    /// Log return over the interval, p_{n+1} - p_n.
    double r = 0.0;
    /// Signed volume imbalance, shares.
    double v = 0.0;
    /// v / W, zero for an empty interval.
    double v_nor = 0.0;
    /// Total absolute volume, shares.
    double W = 0.0;
    /// Boundary mid was stale or substituted.
    bool flagged = false;
};

struct IntervalSeries {
    AggregationScheme scheme = RealTime{};
    std::vector<Interval> intervals;
    /// Warnings collected while aggregating (skipped days, mid gaps).
    std::vector<std::string> warnings;

    std::size_t size() const { return intervals.size(); }
    bool empty() const { return intervals.empty(); }

    /// [begin, end) row ranges, one per day, in order.
    std::vector<std::pair<std::size_t, std::size_t>> day_ranges() const;

    /// Most intervals observed in a single day.
    int max_intervals_per_day() const;

    /// Mean W over all intervals.
    double mean_volume() const;
};

struct ClassificationResult {
    std::vector<SignedTrade> trades;
    /// Trades without a prevailing quote in their day.
    std::size_t no_prevailing_quote = 0;
    /// Trades exactly at the prevailing mid.
    std::size_t undetermined = 0;
};

/// Lee-Ready signing against the last quote strictly before each trade (same
/// day). Trades carrying an explicit side keep it. At-mid trades and trades
/// without a prevailing quote are dropped and counted.
ClassificationResult classify_trades(const std::vector<TradeRecord>& trades,
                                     const std::vector<QuoteRecord>& quotes);

/// Log mids of the quote tape, in (day, timestamp) order.
std::vector<MidPoint> mid_series(const std::vector<QuoteRecord>& quotes);

/// Aggregates signed trades into intervals. Days without trades or without
/// mids are skipped with a warning. Returns never cross day boundaries.
IntervalSeries aggregate(const std::vector<SignedTrade>& trades, const std::vector<MidPoint>& mids,
                         const AggregationScheme& scheme, const Session& session);

enum class CsvSchema { Trades, Quotes };

std::vector<TradeRecord> load_trades_csv(const std::filesystem::path& path);
std::vector<QuoteRecord> load_quotes_csv(const std::filesystem::path& path);
std::vector<TradeRecord> parse_trades_csv(std::istream& in);
std::vector<QuoteRecord> parse_quotes_csv(std::istream& in);

void write_trades_csv(std::ostream& out, const std::vector<TradeRecord>& trades);
void write_quotes_csv(std::ostream& out, const std::vector<QuoteRecord>& quotes);
void write_signed_trades_csv(std::ostream& out, const std::vector<SignedTrade>& trades);

/// `day_id,interval_index,p_open,r,v,v_nor,W`
void write_series_csv(std::ostream& out, const IntervalSeries& series);
IntervalSeries parse_series_csv(std::istream& in, const AggregationScheme& scheme);

}  // namespace texec
