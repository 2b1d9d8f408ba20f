// transient-exec: calibrate a transient-impact model from trades and quotes,
// and compute, compare and simulate execution schedules under it.

#include "texec/calibration.hpp"
#include "texec/errors.hpp"
#include "texec/impact_model.hpp"
#include "texec/market_data.hpp"
#include "texec/optimizer.hpp"
#include "texec/serialization.hpp"
#include "texec/simulator.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace texec;

namespace {

constexpr const char* kUnits = R"(Units:
  theta, delta, per-share costs   bp (1e-4 of price)
  sigma2                          bp^2 per interval
  volumes, X, schedules v         shares
  expected cost                   bp x shares (per-share values divided by |X|)
  variance                        bp^2 x shares^2 (frontier: divided by X^2)
  lambda                          1 / (bp x shares)
  participation x, --participation  percent of market volume
Environment:
  TRANSIENT_EXEC_THREADS          cap on worker threads)";

/// Outputs are rendered in memory and written only once the whole command
/// succeeded, so a failing run leaves no partial files behind.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

    std::ostringstream& file(const std::string& name) {
        files_.emplace_back(name, std::make_unique<std::ostringstream>());
        return *files_.back().second;
    }

    void json(const std::string& name, const Json& j) { file(name) << j.dump(2) << '\n'; }

    void commit() const {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) {
            fail(ErrorKind::Io, "cannot create " + dir_.string() + ": " + ec.message());
        }
        for (const auto& [name, text] : files_) {
            write_text_file(dir_ / name, text->str());
        }
    }

private:
    fs::path dir_;
    std::vector<std::pair<std::string, std::unique_ptr<std::ostringstream>>> files_;
};

Timestamp parse_clock(const std::string& hhmm) {
    int h = 0;
    int m = 0;
    char colon = 0;
    std::istringstream in(hhmm);
    if (!(in >> h >> colon >> m) || colon != ':' || h < 0 || h > 24 || m < 0 || m > 59) {
        fail(ErrorKind::InvalidArgument, "time must be HH:MM, got '" + hhmm + "'");
    }
    return (static_cast<Timestamp>(h) * 3600 + m * 60) * kMicrosPerSecond;
}

struct SessionFlags {
    std::string open = "08:00";
    std::string close = "16:30";

    void add(CLI::App& app) {
        app.add_option("--session-open", open, "Session open, HH:MM UTC")->capture_default_str();
        app.add_option("--session-close", close, "Session close, HH:MM UTC")->capture_default_str();
    }

    Session session() const {
        Session s{parse_clock(open), parse_clock(close)};
        require(s.close > s.open, "session close must be after open");
        return s;
    }
};

struct ModelFlags {
    std::string path;
    int intervals = 0;
    std::string kernel = "parametric";
    std::optional<double> delta;

    void add(CLI::App& app) {
        app.add_option("--model", path, "Calibrated model JSON")->required();
        app.add_option("--intervals", intervals, "Number of intervals N (default: model's intervals per day)");
        app.add_option("--kernel", kernel, "Kernel to use: parametric | tabulated")
            ->check(CLI::IsMember({"parametric", "tabulated"}))
            ->capture_default_str();
        app.add_option("--delta", delta, "Override the half-spread, bp");
    }

    CalibratedModel load() const { return calibrated_model_from_json(read_json_file(path)); }

    CostModel<double> cost_model(const CalibratedModel& m) const {
        const Index n = intervals > 0 ? intervals : m.intervals_per_day;
        PropagatorKernel<double> k = m.kernel();
        if (kernel == "tabulated") {
            require(m.propagator.max_lag > 0, "model has no tabulated propagator");
            k = m.tabulated_kernel();
        }
        return build_cost_model(k, m.linear_theta_bp(), m.mean_volume, m.sigma2_bp2, delta.value_or(m.delta_bp), n);
    }
};

struct SizeFlags {
    std::optional<double> shares;
    double participation = 1.0;
    CLI::Option* shares_opt = nullptr;
    CLI::Option* participation_opt = nullptr;

    void add(CLI::App& app) {
        shares_opt = app.add_option("--X", shares, "Order size in shares (signed: positive buys)");
        participation_opt = app.add_option("--participation", participation,
                                           "Order size as percent of total market volume over the horizon")
                                ->capture_default_str();
        shares_opt->excludes(participation_opt);
    }

    double total(const CostModel<double>& model) const {
        if (shares) {
            require(std::isfinite(*shares), "order size must be finite");
            return *shares;
        }
        require(participation >= 0.0, "participation must be non-negative");
        return participation / 100.0 * model.market_volume().sum();
    }
};

Json model_header(const CostModel<double>& model, double total) {
    return {{"intervals", model.size()},
            {"theta_bp", model.theta()},
            {"delta_bp", model.half_spread()},
            {"sigma2_bp2", model.noise_variance()},
            {"total_shares", total},
            {"market_volume_total", model.market_volume().sum()}};
}

// ---- classify -------------------------------------------------------------

struct ClassifyCmd {
    std::string trades;
    std::string quotes;
    std::string out = ".";

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("classify", "Sign trades against the prevailing quote (Lee-Ready)");
        app->add_option("--trades", trades, "Trades CSV: day_id,timestamp_us,price,size[,side]")->required();
        app->add_option("--quotes", quotes, "Quotes CSV: day_id,timestamp_us,bid,ask")->required();
        app->add_option("--out-dir", out, "Output directory")->capture_default_str();
        app->callback([this] { run(); });
    }

    void run() const {
        const auto t = load_trades_csv(trades);
        const auto q = load_quotes_csv(quotes);
        const auto result = classify_trades(t, q);
        OutputSet outputs(out);
        write_signed_trades_csv(outputs.file("signed_trades.csv"), result.trades);
        outputs.json("classify_report.json", {{"schema_version", kSchemaVersion},
                                              {"kind", "classify_report"},
                                              {"trades_in", t.size()},
                                              {"signed", result.trades.size()},
                                              {"dropped_no_prevailing_quote", result.no_prevailing_quote},
                                              {"dropped_at_mid", result.undetermined}});
        outputs.commit();
        std::cout << "signed " << result.trades.size() << " of " << t.size() << " trades ("
                  << result.no_prevailing_quote << " without quote, " << result.undetermined << " at mid)\n";
    }
};

// ---- calibrate ------------------------------------------------------------

struct CalibrateCmd {
    std::string trades;
    std::string quotes;
    std::string series;
    std::string scheme = "rt";
    double interval = 300.0;
    int d = 8;
    std::string form;
    int bins = 30;
    int max_lag = 50;
    std::optional<double> delta;
    SessionFlags session;
    std::string out = ".";

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("calibrate", "Fit impact function, propagator kernel, noise and spread");
        auto* t = app->add_option("--trades", trades, "Trades CSV");
        auto* q = app->add_option("--quotes", quotes, "Quotes CSV");
        auto* s = app->add_option("--series", series, "Pre-aggregated interval series CSV instead of a tape");
        s->excludes(t);
        t->needs(q);
        app->add_option("--scheme", scheme, "Clock: rt (real time) | tt (trade time) | att (aggregated trade time)")
            ->check(CLI::IsMember({"rt", "tt", "att"}))
            ->capture_default_str();
        app->add_option("--interval", interval, "Real-time interval length, seconds")->capture_default_str();
        app->add_option("--d", d, "Trades per unit for --scheme att")->capture_default_str();
        app->add_option("--form", form, "Impact form: linear | arctan (default: arctan for att, else linear)")
            ->check(CLI::IsMember({"linear", "arctan"}));
        app->add_option("--bins", bins, "Equal-population bins for the impact function")->capture_default_str();
        app->add_option("--max-lag", max_lag, "Propagator lags K_max")->capture_default_str();
        app->add_option("--delta", delta, "Half-spread in bp (required with --series unless --quotes is given)");
        session.add(*app);
        app->add_option("--out-dir", out, "Output directory")->capture_default_str();
        app->callback([this] { run(); });
    }

    AggregationScheme clock() const {
        if (scheme == "rt") {
            require(interval > 0.0, "--interval must be positive");
            return RealTime{interval};
        }
        if (scheme == "tt") {
            return TradeTime{};
        }
        require(d >= 1, "--d must be >= 1");
        return AggregatedTradeTime{d};
    }

    void run() const {
        if (series.empty() && trades.empty()) {
            throw CLI::ValidationError("calibrate", "either --trades/--quotes or --series is required");
        }
        const Session sess = session.session();
        IntervalSeries data;
        std::optional<SpreadEstimate> spread;
        Json tape_report = nullptr;
        if (!series.empty()) {
            std::ifstream in(series);
            if (!in) {
                fail(ErrorKind::Io, "cannot open " + series);
            }
            data = parse_series_csv(in, clock());
        } else {
            const auto t = load_trades_csv(trades);
            const auto qs = load_quotes_csv(quotes);
            if (t.empty()) {
                fail(ErrorKind::MalformedInput, trades + " contains no trades");
            }
            if (qs.empty()) {
                fail(ErrorKind::MalformedInput, quotes + " contains no quotes");
            }
            const auto signed_trades = classify_trades(t, qs);
            data = aggregate(signed_trades.trades, mid_series(qs), clock(), sess);
            tape_report = {{"trades_in", t.size()},
                           {"signed", signed_trades.trades.size()},
                           {"dropped_no_prevailing_quote", signed_trades.no_prevailing_quote},
                           {"dropped_at_mid", signed_trades.undetermined}};
        }
        if (!quotes.empty()) {
            spread = estimate_spread(load_quotes_csv(quotes), sess);
        }
        if (delta) {
            require(*delta >= 0.0, "--delta must be non-negative");
            spread = SpreadEstimate{*delta, 0, 0};
        }
        if (!spread) {
            throw CLI::ValidationError("calibrate", "--delta or --quotes is needed to set the spread");
        }
        if (data.empty()) {
            fail(ErrorKind::InsufficientData, "no intervals after aggregation");
        }

        CalibrationOptions options;
        options.n_bins = bins;
        options.max_lag = max_lag;
        const bool att = scheme == "att";
        options.form = form.empty() ? (att ? ImpactForm::Arctan : ImpactForm::Linear)
                                    : (form == "arctan" ? ImpactForm::Arctan : ImpactForm::Linear);
        const CalibratedModel model = calibrate(data, *spread, options);

        OutputSet outputs(out);
        outputs.json("model.json", to_json(model));
        auto& bins_csv = outputs.file("impact_bins.csv");
        bins_csv << "center,mean_return_bp,std_error_bp,count,fitted_bp\n" << std::setprecision(17);
        for (const auto& b : model.impact.bins) {
            bins_csv << b.center << ',' << b.mean_return_bp << ',' << b.std_error_bp << ',' << b.count << ','
                     << model.impact.evaluate(b.center) << '\n';
        }
        auto& prop_csv = outputs.file("propagator.csv");
        prop_csv << "lag,g,g_se,G0_empirical,G0_fitted\n" << std::setprecision(17);
        const Eigen::VectorXd se = model.propagator.g_std_errors();
        const auto kernel = model.kernel();
        for (int k = 0; k <= model.propagator.max_lag; ++k) {
            prop_csv << k << ',';
            if (k < model.propagator.max_lag) {
                prop_csv << model.propagator.g(k) << ',' << se(k);
            } else {
                prop_csv << ',';
            }
            prop_csv << ',' << model.propagator.table(k) << ',' << kernel(k) << '\n';
        }
        write_series_csv(outputs.file("series.csv"), data);
        Json report = {{"schema_version", kSchemaVersion},
                       {"kind", "fit_report"},
                       {"scheme", describe(data.scheme)},
                       {"intervals", data.size()},
                       {"regression_rows", model.propagator.rows},
                       {"r_squared", model.r_squared},
                       {"condition_number", model.propagator.condition_number},
                       {"kernel_poor_fit", model.kernel_fit.poor_fit},
                       {"crossed_quotes", spread->crossed_quotes},
                       {"warnings", data.warnings}};
        if (!tape_report.is_null()) {
            report["classification"] = tape_report;
        }
        outputs.json("fit_report.json", report);
        outputs.commit();

        std::printf("%s: theta = %.4g bp, G0 = %.4g/(%.4g^2 + l^2)^(%.4g/2), sigma2 = %.4g bp^2, delta = %.4g bp, "
                    "R^2 = %.3f\n",
                    describe(data.scheme).c_str(), model.impact.theta_bp, model.kernel_fit.gamma0, model.kernel_fit.l0,
                    model.kernel_fit.beta, model.sigma2_bp2, model.delta_bp, model.r_squared);
        for (const auto& w : data.warnings) {
            std::cerr << "warning: " << w << '\n';
        }
        for (const auto& w : model.impact.warnings) {
            std::cerr << "warning: " << w << '\n';
        }
        if (model.kernel_fit.poor_fit) {
            std::cerr << "warning: kernel fit residual is large relative to the empirical propagator\n";
        }
    }
};

// ---- optimize -------------------------------------------------------------

struct OptimizeCmd {
    ModelFlags model;
    SizeFlags size;
    double lambda = 0.0;
    bool no_spread = false;
    std::string method = "auto";
    double tolerance = 1e-10;
    std::string out = ".";

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("optimize", "Optimal schedule for one risk aversion");
        model.add(*app);
        size.add(*app);
        app->add_option("--lambda", lambda, "Risk aversion")->capture_default_str();
        app->add_flag("--no-spread", no_spread, "Drop the spread term from the objective");
        app->add_option("--method", method, "auto | closed-form | numerical | smoothed")
            ->check(CLI::IsMember({"auto", "closed-form", "numerical", "smoothed"}))
            ->capture_default_str();
        app->add_option("--tolerance", tolerance, "Solver tolerance")->capture_default_str();
        app->add_option("--out-dir", out, "Output directory")->capture_default_str();
        app->callback([this] { run(); });
    }

    void run() const {
        require(lambda >= 0.0, "--lambda must be non-negative");
        const auto calibrated = model.load();
        const auto cost = model.cost_model(calibrated);
        const double total = size.total(cost);
        const auto objective_model = no_spread ? cost.with_half_spread(0.0) : cost;

        OptimizationConfig config;
        config.lambda = lambda;
        config.total = total;
        config.tolerance = tolerance;

        std::string path = method;
        if (path == "auto") {
            path = objective_model.half_spread() == 0.0 ? "closed-form" : "numerical";
        }
        if (path == "closed-form") {
            require(objective_model.half_spread() == 0.0, "closed form ignores the spread: add --no-spread");
        }
        SolveResult<double> solved;
        if (total == 0.0) {
            solved.schedule = Schedule<double>::Zero(cost.size());
        } else if (path == "closed-form") {
            solved.schedule = solve_closed_form(objective_model, total, lambda);
            solved.diagnostics = detail::finish(objective_model, solved.schedule, total, lambda);
            solved.diagnostics.path = SolverPath::ClosedForm;
        } else if (path == "numerical") {
            solved = solve_with_spread(objective_model, config);
        } else {
            solved = solve_smoothed(objective_model, config);
        }

        OutputSet outputs(out);
        write_schedule_csv(outputs.file("schedule.csv"), solved.schedule, cost.market_volume());
        Json report = {{"schema_version", kSchemaVersion},
                       {"kind", "schedule_report"},
                       {"model", model_header(cost, total)},
                       {"lambda", lambda},
                       {"spread_in_objective", !no_spread},
                       {"diagnostics", to_json(solved.diagnostics)},
                       {"cost", to_json(cost_report(cost, solved.schedule, lambda))},
                       {"variance_offset_note",
                        "variance uses V_ij = sigma2 min(i,j); the sum-of-squared-remaining-volume convention "
                        "adds sigma2 X^2"},
                       {"variance_offset", cost.noise_variance() * total * total}};
        outputs.json("report.json", report);
        outputs.commit();

        const auto r = cost_report(cost, solved.schedule, lambda);
        if (r.fractional_impact) {
            std::printf("impact %.4f bp, spread %.4f bp per share; path %s\n", *r.fractional_impact,
                        *r.fractional_spread, to_string(solved.diagnostics.path));
        } else {
            std::printf("zero order: all costs 0\n");
        }
        if (!solved.diagnostics.converged) {
            std::cerr << "warning: solver stopped before reaching the tolerance\n";
        }
    }
};

// ---- frontier -------------------------------------------------------------

std::vector<double> parse_lambda_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        try {
            std::size_t used = 0;
            const double x = std::stod(item, &used);
            if (item.find_first_not_of(" \t", used) != std::string::npos) {
                throw std::invalid_argument(item);
            }
            out.push_back(x);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--lambdas", "cannot parse '" + item + "'");
        }
    }
    return out;
}

struct FrontierCmd {
    ModelFlags model;
    SizeFlags size;
    std::optional<std::string> lambdas;
    double lambda_min = 1e-8;
    double lambda_max = 1e-2;
    int lambda_count = 20;
    bool no_zero = false;
    std::optional<double> ac_rho;
    std::string out = ".";

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("frontier", "Efficient frontier and Almgren-Chriss baseline");
        model.add(*app);
        size.add(*app);
        auto* list = app->add_option("--lambdas", lambdas, "Comma-separated risk aversions");
        app->add_option("--lambda-min", lambda_min, "Log grid lower end")->excludes(list)->capture_default_str();
        app->add_option("--lambda-max", lambda_max, "Log grid upper end")->excludes(list)->capture_default_str();
        app->add_option("--lambda-count", lambda_count, "Log grid points")->excludes(list)->capture_default_str();
        app->add_flag("--no-zero", no_zero, "Leave lambda = 0 out of the log grid")->excludes(list);
        app->add_option("--ac-rho", ac_rho, "Almgren-Chriss temporary impact (default: matched to the model)");
        app->add_option("--out-dir", out, "Output directory")->capture_default_str();
        app->callback([this] { run(); });
    }

    void run() const {
        std::vector<double> grid;
        if (lambdas) {
            grid = parse_lambda_list(*lambdas);
            if (grid.empty()) {
                throw CLI::ValidationError("--lambdas", "risk-aversion list is empty");
            }
        } else {
            grid = log_lambda_grid(lambda_min, lambda_max, lambda_count, !no_zero);
        }
        for (double l : grid) {
            if (!(l >= 0.0) || !std::isfinite(l)) {
                throw CLI::ValidationError("--lambdas", "risk aversions must be finite and non-negative");
            }
        }
        const auto calibrated = model.load();
        const auto cost = model.cost_model(calibrated);
        const double total = size.total(cost);
        require(total != 0.0, "frontier needs a non-zero order size");

        const auto prop = efficient_frontier(cost, total, grid);
        const auto ac = almgren_chriss_frontier(cost, total, grid, ac_rho);

        OutputSet outputs(out);
        write_frontier_csv(outputs.file("frontier.csv"), prop, ac);
        write_frontier_curve_csv(outputs.file("frontier_propagator.csv"), prop);
        write_frontier_curve_csv(outputs.file("frontier_ac.csv"), ac);
        auto& sched = outputs.file("frontier_schedules.csv");
        sched << "interval" << std::setprecision(17);
        for (const auto& p : prop) {
            sched << ",lambda=" << p.lambda;
        }
        sched << '\n';
        for (Index k = 0; k < cost.size(); ++k) {
            sched << k;
            for (const auto& p : prop) {
                sched << ',';
                if (!p.error) {
                    sched << p.schedule(k);
                }
            }
            sched << '\n';
        }
        outputs.commit();

        std::size_t failed = 0;
        for (const auto& p : prop) {
            if (p.error) {
                ++failed;
                std::cerr << "lambda " << p.lambda << " failed: " << *p.error << '\n';
            }
        }
        std::cout << "frontier: " << prop.size() - failed << " of " << prop.size() << " points solved\n";
    }
};

// ---- simulate -------------------------------------------------------------

struct SimulateCmd {
    std::string spec;
    std::string out = ".";

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("simulate", "Synthetic market from a spec JSON");
        app->add_option("--spec", spec, "Market spec JSON")->required();
        app->add_option("--out-dir", out, "Output directory")->capture_default_str();
        app->callback([this] { run(); });
    }

    void run() const {
        const Json j = read_json_file(spec);
        const MarketSpec s = market_spec_from_json(j);
        const std::string tape = j.value("tape", std::string("series"));
        const double half_spread = j.value("half_spread_bp", 0.0);

        OutputSet outputs(out);
        if (tape == "series") {
            write_series_csv(outputs.file("series.csv"), simulate_market(s));
        } else if (tape == "real_time" || tape == "trade") {
            const MarketTape t = tape == "trade" ? simulate_trade_tape(s, half_spread)
                                                 : simulate_real_time_tape(s, half_spread);
            write_series_csv(outputs.file("series.csv"), t.truth);
            write_trades_csv(outputs.file("trades.csv"), t.trades);
            write_quotes_csv(outputs.file("quotes.csv"), t.quotes);
        } else {
            fail(ErrorKind::SchemaMismatch, "tape must be series, real_time or trade");
        }
        outputs.json("spec_used.json", to_json(s));
        outputs.commit();
        std::cout << "simulated " << s.days << " days x " << s.intervals_per_day << " intervals (" << tape << ")\n";
    }
};

// ---- cost-mc --------------------------------------------------------------

struct CostMcCmd {
    ModelFlags model;
    std::string schedule;
    std::size_t paths = 100'000;
    std::uint64_t seed = 1;
    std::string convention = "strict";
    bool samples = false;
    std::string out = ".";

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("cost-mc", "Monte Carlo cost distribution of a schedule");
        model.add(*app);
        app->add_option("--schedule", schedule, "Schedule CSV (interval,v,x)")->required();
        app->add_option("--paths", paths, "Simulated paths")->capture_default_str();
        app->add_option("--seed", seed, "Random seed")->capture_default_str();
        app->add_option("--convention", convention, "Noise timing: strict (after the interval) | inclusive")
            ->check(CLI::IsMember({"strict", "inclusive"}))
            ->capture_default_str();
        app->add_flag("--samples", samples, "Also write per-path costs");
        app->add_option("--out-dir", out, "Output directory")->capture_default_str();
        app->callback([this] { run(); });
    }

    void run() const {
        require(paths >= 2, "--paths must be >= 2");
        const auto calibrated = model.load();
        std::ifstream in(schedule);
        if (!in) {
            fail(ErrorKind::Io, "cannot open " + schedule);
        }
        const Schedule<double> v = parse_schedule_csv(in);
        ModelFlags sized = model;
        sized.intervals = static_cast<int>(v.size());
        const auto cost = sized.cost_model(calibrated);

        ExecutionOptions options;
        options.paths = paths;
        options.seed = seed;
        options.convention = convention == "strict" ? NoiseConvention::StrictlyAfter : NoiseConvention::Inclusive;
        options.keep_samples = samples;
        const auto sim = simulate_execution(cost, v, options);

        const double total = v.sum();
        const double analytic_mean = impact_cost(cost, v) + spread_cost(cost, v);
        const double analytic_var =
            cost_variance(cost, v) + (options.convention == NoiseConvention::Inclusive ? cost.noise_variance() * total * total : 0.0);
        auto z = [](double diff, double se) { return se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : INFINITY); };
        const double z_mean = z(sim.mean - analytic_mean, sim.mean_se);
        const double z_var = z(sim.variance - analytic_var, sim.variance_se);

        OutputSet outputs(out);
        outputs.json("mc_report.json", {{"schema_version", kSchemaVersion},
                                        {"kind", "mc_report"},
                                        {"convention", convention},
                                        {"seed", seed},
                                        {"analytic", {{"mean", analytic_mean}, {"variance", analytic_var}}},
                                        {"sampled", to_json(sim)},
                                        {"z_mean", z_mean},
                                        {"z_variance", z_var},
                                        {"within_3se", std::abs(z_mean) < 3.0 && std::abs(z_var) < 3.0}});
        if (samples) {
            auto& csv = outputs.file("mc_samples.csv");
            csv << "path,cost\n" << std::setprecision(17);
            for (std::size_t i = 0; i < sim.samples.size(); ++i) {
                csv << i << ',' << sim.samples[i] << '\n';
            }
        }
        outputs.commit();
        std::printf("mean %.6g (analytic %.6g, z %.2f), variance %.6g (analytic %.6g, z %.2f)\n", sim.mean,
                    analytic_mean, z_mean, sim.variance, analytic_var, z_var);
    }
};

// ---- compare --------------------------------------------------------------

struct CompareCmd {
    ModelFlags model;
    SizeFlags size;
    double lambda = 0.0;
    std::string out = ".";

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("compare", "Costs of flat, Almgren-Chriss, U-shaped and oscillating schedules");
        model.add(*app);
        size.add(*app);
        app->add_option("--lambda", lambda, "Risk aversion")->capture_default_str();
        app->add_option("--out-dir", out, "Output directory")->capture_default_str();
        app->callback([this] { run(); });
    }

    void run() const {
        require(lambda >= 0.0, "--lambda must be non-negative");
        const auto calibrated = model.load();
        const auto cost = model.cost_model(calibrated);
        const double total = size.total(cost);
        require(total != 0.0, "compare needs a non-zero order size");
        const Index n = cost.size();

        OptimizationConfig config;
        config.lambda = lambda;
        config.total = total;
        const std::vector<std::pair<std::string, Schedule<double>>> strategies = {
            {"flat", bertsimas_lo_flat(total, n)},
            {"almgren_chriss", almgren_chriss_schedule(total, n, static_cast<double>(n), lambda, cost.noise_variance(),
                                                       matched_temporary_impact(cost))},
            {"optimal_with_spread", solve_with_spread(cost, config).schedule},
            {"optimal_without_spread", solve_closed_form(cost.with_half_spread(0.0), total, lambda)},
        };

        OutputSet outputs(out);
        auto& csv = outputs.file("compare.csv");
        csv << "strategy,impact_bp,spread_bp,total_bp,variance,objective,min_v,negative_intervals\n"
            << std::setprecision(17);
        Json rows = Json::array();
        for (const auto& [name, v] : strategies) {
            const auto r = cost_report(cost, v, lambda);
            const auto negatives = (v.array() < 0.0).count();
            csv << name << ',' << *r.fractional_impact << ',' << *r.fractional_spread << ','
                << *r.fractional_impact + *r.fractional_spread << ',' << r.variance << ',' << r.objective << ','
                << v.minCoeff() << ',' << negatives << '\n';
            Json row = to_json(r);
            row["strategy"] = name;
            row["negative_intervals"] = negatives;
            rows.push_back(row);
            std::printf("%-24s impact %9.4f bp  spread %9.4f bp\n", name.c_str(), *r.fractional_impact,
                        *r.fractional_spread);
        }
        outputs.json("compare.json", {{"schema_version", kSchemaVersion},
                                      {"kind", "compare_report"},
                                      {"model", model_header(cost, total)},
                                      {"lambda", lambda},
                                      {"strategies", rows}});
        outputs.commit();
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transient-impact calibration and optimal execution"};
    app.footer(kUnits);
    app.require_subcommand(1);

    ClassifyCmd classify;
    CalibrateCmd calibrate_cmd;
    OptimizeCmd optimize;
    FrontierCmd frontier;
    SimulateCmd simulate;
    CostMcCmd cost_mc;
    CompareCmd compare;
    classify.add(app);
    calibrate_cmd.add(app);
    optimize.add(app);
    frontier.add(app);
    simulate.add(app);
    cost_mc.add(app);
    compare.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // usage errors (including ones raised from callbacks) exit with 2
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
