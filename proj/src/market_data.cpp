#include "texec/market_data.hpp"

#include "texec/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace texec {

namespace {

struct DayKey {
    int day_id;
    Timestamp timestamp;
};

template <typename T>
void sort_by_day_time(std::vector<T>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const T& a, const T& b) {
        return a.day_id != b.day_id ? a.day_id < b.day_id : a.timestamp < b.timestamp;
    });
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

[[noreturn]] void malformed(std::size_t line, const std::string& reason) {
    fail(ErrorKind::MalformedInput, "row " + std::to_string(line) + ": " + reason);
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* name) {
    T value{};
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end || field.empty()) {
        malformed(line, std::string("cannot parse ") + name + " '" + std::string(field) + "'");
    }
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value)) {
            malformed(line, std::string(name) + " is not finite");
        }
    }
    return value;
}

/// Reads the header and calls row(fields, line) for every non-empty data row.
template <typename RowFn>
void read_csv(std::istream& in, const std::vector<std::vector<std::string>>& accepted_headers, RowFn row) {
    std::string line;
    if (!std::getline(in, line)) {
        fail(ErrorKind::MalformedInput, "empty input: header row required");
    }
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
        line.erase(0, 3);  // UTF-8 byte order mark
    }
    const auto header = split(line);
    bool known = false;
    std::size_t columns = 0;
    for (const auto& h : accepted_headers) {
        if (h.size() == header.size() && std::equal(h.begin(), h.end(), header.begin())) {
            known = true;
            columns = h.size();
        }
    }
    if (!known) {
        std::string expected;
        for (const auto& h : accepted_headers) {
            std::string joined;
            for (const auto& c : h) {
                joined += (joined.empty() ? "" : ",") + c;
            }
            expected += (expected.empty() ? "" : " or ") + joined;
        }
        fail(ErrorKind::SchemaMismatch, "unexpected header '" + line + "', expected " + expected);
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split(line);
        if (fields.size() != columns) {
            malformed(line_no, "expected " + std::to_string(columns) + " fields, found " +
                                   std::to_string(fields.size()));
        }
        row(fields, line_no);
    }
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::Io, "cannot open " + path.string());
    }
    return in;
}

/// Last mid strictly before t within [begin, end), or nullptr.
const MidPoint* mid_before(const std::vector<MidPoint>& mids, std::size_t begin, std::size_t end, Timestamp t) {
    auto first = mids.begin() + static_cast<std::ptrdiff_t>(begin);
    auto last = mids.begin() + static_cast<std::ptrdiff_t>(end);
    auto it = std::lower_bound(first, last, t, [](const MidPoint& m, Timestamp ts) { return m.timestamp < ts; });
    if (it == first) {
        return nullptr;
    }
    return &*(it - 1);
}

struct BoundaryPrice {
    double log_mid;
    bool flagged;
    Timestamp quote_time;
};

BoundaryPrice sample_mid(const std::vector<MidPoint>& mids, std::size_t begin, std::size_t end, Timestamp t) {
    if (const MidPoint* m = mid_before(mids, begin, end, t)) {
        return {m->log_mid, false, m->timestamp};
    }
    // no quote yet this day: first quote substitutes
    return {mids[begin].log_mid, true, mids[begin].timestamp};
}

template <typename T>
std::map<int, std::pair<std::size_t, std::size_t>> ranges_by_day(const std::vector<T>& rows) {
    std::map<int, std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        while (j < rows.size() && rows[j].day_id == rows[i].day_id) {
            ++j;
        }
        out[rows[i].day_id] = {i, j};
        i = j;
    }
    return out;
}

void finish_interval(Interval& iv) {
    iv.v_nor = iv.W > 0.0 ? iv.v / iv.W : 0.0;
    // guard against rounding pushing |v_nor| past 1
    iv.v_nor = std::clamp(iv.v_nor, -1.0, 1.0);
}

}  // namespace

std::string describe(const AggregationScheme& scheme) {
    if (const auto* rt = std::get_if<RealTime>(&scheme)) {
        std::ostringstream os;
        os << "real-time(" << rt->interval_seconds << "s)";
        return os.str();
    }
    if (std::holds_alternative<TradeTime>(scheme)) {
        return "trade-time";
    }
    return "aggregated-trade-time(d=" + std::to_string(std::get<AggregatedTradeTime>(scheme).trades_per_unit) + ")";
}

std::optional<int> trades_per_unit(const AggregationScheme& scheme) {
    if (std::holds_alternative<TradeTime>(scheme)) {
        return 1;
    }
    if (const auto* att = std::get_if<AggregatedTradeTime>(&scheme)) {
        return att->trades_per_unit;
    }
    return std::nullopt;
}

Timestamp day_start(Timestamp t) {
    Timestamp q = t / kMicrosPerDay;
    if (t < 0 && q * kMicrosPerDay != t) {
        --q;
    }
    return q * kMicrosPerDay;
}

std::vector<std::pair<std::size_t, std::size_t>> IntervalSeries::day_ranges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < intervals.size();) {
        std::size_t j = i;
        while (j < intervals.size() && intervals[j].day_id == intervals[i].day_id) {
            ++j;
        }
        out.emplace_back(i, j);
        i = j;
    }
    return out;
}

int IntervalSeries::max_intervals_per_day() const {
    std::size_t best = 0;
    for (const auto& [b, e] : day_ranges()) {
        best = std::max(best, e - b);
    }
    return static_cast<int>(best);
}

double IntervalSeries::mean_volume() const {
    if (intervals.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& iv : intervals) {
        sum += iv.W;
    }
    return sum / static_cast<double>(intervals.size());
}

ClassificationResult classify_trades(const std::vector<TradeRecord>& trades,
                                     const std::vector<QuoteRecord>& quotes) {
    std::vector<QuoteRecord> sorted_quotes = quotes;
    sort_by_day_time(sorted_quotes);
    const auto quote_days = ranges_by_day(sorted_quotes);

    std::vector<TradeRecord> sorted_trades = trades;
    sort_by_day_time(sorted_trades);

    ClassificationResult out;
    out.trades.reserve(sorted_trades.size());
    for (const auto& t : sorted_trades) {
        int sign = 0;
        if (t.side && (*t.side == 1 || *t.side == -1)) {
            sign = *t.side;
        } else {
            const auto day = quote_days.find(t.day_id);
            const QuoteRecord* prevailing = nullptr;
            if (day != quote_days.end()) {
                auto first = sorted_quotes.begin() + static_cast<std::ptrdiff_t>(day->second.first);
                auto last = sorted_quotes.begin() + static_cast<std::ptrdiff_t>(day->second.second);
                auto it = std::lower_bound(first, last, t.timestamp,
                                           [](const QuoteRecord& q, Timestamp ts) { return q.timestamp < ts; });
                if (it != first) {
                    prevailing = &*(it - 1);
                }
            }
            if (prevailing == nullptr) {
                ++out.no_prevailing_quote;
                continue;
            }
            const double mid = prevailing->mid();
            sign = t.price > mid ? 1 : (t.price < mid ? -1 : 0);
        }
        if (sign == 0) {
            ++out.undetermined;
            continue;
        }
        out.trades.push_back({t.timestamp, sign * t.size, t.price, t.day_id});
    }
    return out;
}

std::vector<MidPoint> mid_series(const std::vector<QuoteRecord>& quotes) {
    std::vector<QuoteRecord> sorted = quotes;
    sort_by_day_time(sorted);
    std::vector<MidPoint> out;
    out.reserve(sorted.size());
    for (const auto& q : sorted) {
        const double mid = q.mid();
        if (mid > 0.0) {
            out.push_back({q.timestamp, std::log(mid), q.day_id});
        }
    }
    return out;
}

IntervalSeries aggregate(const std::vector<SignedTrade>& trades, const std::vector<MidPoint>& mids,
                         const AggregationScheme& scheme, const Session& session) {
    require(session.close > session.open, "session close must be after open");
    if (const auto* rt = std::get_if<RealTime>(&scheme)) {
        require(rt->interval_seconds > 0.0, "interval length must be positive");
    }
    const std::optional<int> d = trades_per_unit(scheme);
    if (d) {
        require(*d >= 1, "trades per unit must be >= 1");
    }

    std::vector<SignedTrade> sorted_trades = trades;
    sort_by_day_time(sorted_trades);
    std::vector<MidPoint> sorted_mids = mids;
    sort_by_day_time(sorted_mids);
    const auto trade_days = ranges_by_day(sorted_trades);
    const auto mid_days = ranges_by_day(sorted_mids);

    std::vector<int> days;
    for (const auto& [day, _] : trade_days) {
        days.push_back(day);
    }
    for (const auto& [day, _] : mid_days) {
        if (!trade_days.count(day)) {
            days.push_back(day);
        }
    }
    std::sort(days.begin(), days.end());

    IntervalSeries series;
    series.scheme = scheme;

    for (int day : days) {
        const auto tr = trade_days.find(day);
        const auto mr = mid_days.find(day);
        if (tr == trade_days.end()) {
            series.warnings.push_back("EmptyDay: day " + std::to_string(day) + " has no trades, skipped");
            continue;
        }
        if (mr == mid_days.end()) {
            series.warnings.push_back("EmptyDay: day " + std::to_string(day) + " has no quotes, skipped");
            continue;
        }
        const auto [mb, me] = mr->second;
        const auto [tb, te] = tr->second;
        const Timestamp midnight = day_start(sorted_mids[mb].timestamp);
        const Timestamp open = midnight + session.open;
        const Timestamp close = midnight + session.close;

        std::vector<Interval> rows;
        std::vector<Timestamp> boundaries;

        if (const auto* rt = std::get_if<RealTime>(&scheme)) {
            const auto tau = static_cast<Timestamp>(std::llround(rt->interval_seconds * kMicrosPerSecond));
            const auto count = static_cast<std::size_t>(session.length() / tau);
            if (count == 0) {
                series.warnings.push_back("EmptyDay: session shorter than one interval on day " +
                                          std::to_string(day));
                continue;
            }
            rows.resize(count);
            for (std::size_t n = 0; n <= count; ++n) {
                boundaries.push_back(open + static_cast<Timestamp>(n) * tau);
            }
            for (std::size_t i = tb; i < te; ++i) {
                const auto& t = sorted_trades[i];
                if (t.timestamp < open || t.timestamp >= boundaries.back()) {
                    continue;
                }
                const auto n = static_cast<std::size_t>((t.timestamp - open) / tau);
                rows[n].v += t.signed_volume;
                rows[n].W += std::abs(t.signed_volume);
            }
        } else {
            std::vector<std::size_t> in_session;
            for (std::size_t i = tb; i < te; ++i) {
                const Timestamp ts = sorted_trades[i].timestamp;
                if (ts >= open && ts < close) {
                    in_session.push_back(i);
                }
            }
            if (in_session.empty()) {
                series.warnings.push_back("EmptyDay: day " + std::to_string(day) + " has no session trades, skipped");
                continue;
            }
            const auto unit = static_cast<std::size_t>(*d);
            const std::size_t count = (in_session.size() + unit - 1) / unit;
            rows.resize(count);
            for (std::size_t n = 0; n < count; ++n) {
                boundaries.push_back(sorted_trades[in_session[n * unit]].timestamp);
                for (std::size_t i = n * unit; i < std::min(in_session.size(), (n + 1) * unit); ++i) {
                    const double vol = sorted_trades[in_session[i]].signed_volume;
                    rows[n].v += vol;
                    rows[n].W += std::abs(vol);
                }
            }
            boundaries.push_back(close);
        }

        std::size_t flagged = 0;
        BoundaryPrice prev = sample_mid(sorted_mids, mb, me, boundaries[0]);
        for (std::size_t n = 0; n < rows.size(); ++n) {
            const BoundaryPrice next = sample_mid(sorted_mids, mb, me, boundaries[n + 1]);
            Interval& iv = rows[n];
            iv.day_id = day;
            iv.index = static_cast<int>(n);
            iv.p_open = prev.log_mid;
            iv.r = next.log_mid - prev.log_mid;
            // stale: no quote update since before the previous boundary
            const bool stale = n > 0 && prev.quote_time < boundaries[n - 1];
            iv.flagged = prev.flagged || stale;
            flagged += iv.flagged ? 1 : 0;
            finish_interval(iv);
            prev = next;
        }
        if (flagged > 0) {
            series.warnings.push_back("MidPriceGap: day " + std::to_string(day) + " has " + std::to_string(flagged) +
                                      " intervals priced from a stale or substituted mid");
        }
        series.intervals.insert(series.intervals.end(), rows.begin(), rows.end());
    }
    return series;
}

std::vector<TradeRecord> parse_trades_csv(std::istream& in) {
    std::vector<TradeRecord> out;
    read_csv(in,
             {{"day_id", "timestamp_us", "price", "size"}, {"day_id", "timestamp_us", "price", "size", "side"}},
             [&](const std::vector<std::string_view>& f, std::size_t line) {
                 TradeRecord t;
                 t.day_id = parse_number<int>(f[0], line, "day_id");
                 t.timestamp = parse_number<Timestamp>(f[1], line, "timestamp_us");
                 t.price = parse_number<double>(f[2], line, "price");
                 t.size = parse_number<double>(f[3], line, "size");
                 if (t.price <= 0.0) {
                     malformed(line, "price must be positive");
                 }
                 if (t.size <= 0.0) {
                     malformed(line, "size must be positive");
                 }
                 if (f.size() == 5 && !f[4].empty()) {
                     std::string_view s = f[4];
                     if (s == "1" || s == "+1" || s == "B" || s == "b") {
                         t.side = 1;
                     } else if (s == "-1" || s == "S" || s == "s") {
                         t.side = -1;
                     } else if (s != "0" && s != "?") {
                         malformed(line, "side must be +1, -1, 0 or empty");
                     }
                 }
                 out.push_back(t);
             });
    sort_by_day_time(out);
    return out;
}

std::vector<QuoteRecord> parse_quotes_csv(std::istream& in) {
    std::vector<QuoteRecord> out;
    read_csv(in, {{"day_id", "timestamp_us", "bid", "ask"}},
             [&](const std::vector<std::string_view>& f, std::size_t line) {
                 QuoteRecord q;
                 q.day_id = parse_number<int>(f[0], line, "day_id");
                 q.timestamp = parse_number<Timestamp>(f[1], line, "timestamp_us");
                 q.bid = parse_number<double>(f[2], line, "bid");
                 q.ask = parse_number<double>(f[3], line, "ask");
                 if (q.bid <= 0.0 || q.ask <= 0.0) {
                     malformed(line, "bid and ask must be positive");
                 }
                 out.push_back(q);
             });
    sort_by_day_time(out);
    return out;
}

std::vector<TradeRecord> load_trades_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_trades_csv(in);
}

std::vector<QuoteRecord> load_quotes_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_quotes_csv(in);
}

void write_trades_csv(std::ostream& out, const std::vector<TradeRecord>& trades) {
    out << "day_id,timestamp_us,price,size,side\n" << std::setprecision(17);
    for (const auto& t : trades) {
        out << t.day_id << ',' << t.timestamp << ',' << t.price << ',' << t.size << ',';
        if (t.side) {
            out << *t.side;
        }
        out << '\n';
    }
}

void write_quotes_csv(std::ostream& out, const std::vector<QuoteRecord>& quotes) {
    out << "day_id,timestamp_us,bid,ask\n" << std::setprecision(17);
    for (const auto& q : quotes) {
        out << q.day_id << ',' << q.timestamp << ',' << q.bid << ',' << q.ask << '\n';
    }
}

void write_signed_trades_csv(std::ostream& out, const std::vector<SignedTrade>& trades) {
    out << "day_id,timestamp_us,signed_volume,price\n" << std::setprecision(17);
    for (const auto& t : trades) {
        out << t.day_id << ',' << t.timestamp << ',' << t.signed_volume << ',' << t.price << '\n';
    }
}

void write_series_csv(std::ostream& out, const IntervalSeries& series) {
    out << "day_id,interval_index,p_open,r,v,v_nor,W\n" << std::setprecision(17);
    for (const auto& iv : series.intervals) {
        out << iv.day_id << ',' << iv.index << ',' << iv.p_open << ',' << iv.r << ',' << iv.v << ',' << iv.v_nor << ','
            << iv.W << '\n';
    }
}

IntervalSeries parse_series_csv(std::istream& in, const AggregationScheme& scheme) {
    IntervalSeries series;
    series.scheme = scheme;
    read_csv(in, {{"day_id", "interval_index", "p_open", "r", "v", "v_nor", "W"}},
             [&](const std::vector<std::string_view>& f, std::size_t line) {
                 Interval iv;
                 iv.day_id = parse_number<int>(f[0], line, "day_id");
                 iv.index = parse_number<int>(f[1], line, "interval_index");
                 iv.p_open = parse_number<double>(f[2], line, "p_open");
                 iv.r = parse_number<double>(f[3], line, "r");
                 iv.v = parse_number<double>(f[4], line, "v");
                 iv.v_nor = parse_number<double>(f[5], line, "v_nor");
                 iv.W = parse_number<double>(f[6], line, "W");
                 if (iv.W < 0.0 || std::abs(iv.v) > iv.W * (1.0 + 1e-12) || std::abs(iv.v_nor) > 1.0) {
                     malformed(line, "interval violates |v| <= W or |v_nor| <= 1");
                 }
                 series.intervals.push_back(iv);
             });
    std::stable_sort(series.intervals.begin(), series.intervals.end(), [](const Interval& a, const Interval& b) {
        return a.day_id != b.day_id ? a.day_id < b.day_id : a.index < b.index;
    });
    return series;
}

}  // namespace texec
