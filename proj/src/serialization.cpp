#include "texec/serialization.hpp"

#include "texec/errors.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace texec {

namespace {

const Json& field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        fail(ErrorKind::SchemaMismatch, std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

template <typename T>
T get(const Json& j, const char* key) {
    const Json& v = field(j, key);
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorKind::SchemaMismatch, std::string("field '") + key + "' has the wrong type");
    }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    return j.is_object() && j.contains(key) ? get<T>(j, key) : fallback;
}

void check_version(const Json& j, const char* kind) {
    const int version = get<int>(j, "schema_version");
    if (version != kSchemaVersion) {
        fail(ErrorKind::SchemaMismatch, "unsupported schema_version " + std::to_string(version));
    }
    if (j.contains("kind") && get<std::string>(j, "kind") != kind) {
        fail(ErrorKind::SchemaMismatch, "expected a '" + std::string(kind) + "' document, found '" +
                                            get<std::string>(j, "kind") + "'");
    }
}

Json vector_json(const Eigen::VectorXd& v) {
    return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from(const Json& j, const char* key) {
    const auto values = get<std::vector<double>>(j, key);
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

PropagatorKernel<double> kernel_from_json(const Json& j) {
    const auto type = get_or<std::string>(j, "type", "parametric");
    if (type == "parametric") {
        return PropagatorKernel<double>::parametric(get<double>(j, "gamma0"), get<double>(j, "l0"),
                                                    get<double>(j, "beta"));
    }
    if (type == "tabulated") {
        return PropagatorKernel<double>::tabulated(get<std::vector<double>>(j, "values"));
    }
    fail(ErrorKind::SchemaMismatch, "unknown kernel type '" + type + "'");
}

void write_number(std::ostream& out, double x) {
    out << std::setprecision(17) << x;
}

}  // namespace

Json to_json(const AggregationScheme& scheme) {
    if (const auto* rt = std::get_if<RealTime>(&scheme)) {
        return {{"type", "real_time"}, {"interval_seconds", rt->interval_seconds}};
    }
    return {{"type", "aggregated_trade_time"}, {"trades_per_unit", *trades_per_unit(scheme)}};
}

AggregationScheme scheme_from_json(const Json& j) {
    const auto type = get<std::string>(j, "type");
    if (type == "real_time") {
        return RealTime{get<double>(j, "interval_seconds")};
    }
    if (type == "trade_time") {
        return TradeTime{};
    }
    if (type == "aggregated_trade_time") {
        const int d = get<int>(j, "trades_per_unit");
        return d == 1 ? AggregationScheme{TradeTime{}} : AggregationScheme{AggregatedTradeTime{d}};
    }
    fail(ErrorKind::SchemaMismatch, "unknown scheme type '" + type + "'");
}

Json to_json(const PropagatorKernel<double>& kernel) {
    if (const auto* p = kernel.parameters()) {
        return {{"type", "parametric"}, {"gamma0", p->gamma0}, {"l0", p->l0}, {"beta", p->beta}};
    }
    return {{"type", "tabulated"}, {"values", *kernel.table()}};
}

Json to_json(const CalibratedModel& m) {
    Json bins = Json::array();
    for (const auto& b : m.impact.bins) {
        bins.push_back({{"center", b.center},
                        {"mean_return_bp", b.mean_return_bp},
                        {"std_error_bp", b.std_error_bp},
                        {"count", b.count}});
    }
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "calibrated_model";
    j["units"] = {{"theta", "bp"},
                  {"rho", "1/shares"},
                  {"sigma2", "bp^2 per interval"},
                  {"delta", "bp"},
                  {"mean_volume", "shares per interval"},
                  {"lags", "intervals"}};
    j["scheme"] = to_json(m.scheme);
    j["impact"] = {{"form", to_string(m.impact.form)},
                   {"theta_bp", m.impact.theta_bp},
                   {"theta_se", m.impact.theta_se},
                   {"rho", m.impact.rho},
                   {"rho_se", m.impact.rho_se},
                   {"linear_theta_bp", m.linear_theta_bp()},
                   {"warnings", m.impact.warnings},
                   {"bins", bins}};
    j["kernel"] = {{"type", "parametric"},
                   {"gamma0", m.kernel_fit.gamma0},
                   {"l0", m.kernel_fit.l0},
                   {"beta", m.kernel_fit.beta},
                   {"gamma0_se", m.kernel_fit.gamma0_se},
                   {"l0_se", m.kernel_fit.l0_se},
                   {"beta_se", m.kernel_fit.beta_se},
                   {"residual_norm", m.kernel_fit.residual_norm},
                   {"poor_fit", m.kernel_fit.poor_fit}};
    if (m.propagator.max_lag > 0) {
        j["propagator"] = {{"max_lag", m.propagator.max_lag},
                           {"history", m.propagator.history},
                           {"rows", m.propagator.rows},
                           {"condition_number", m.propagator.condition_number},
                           {"g", vector_json(m.propagator.g)},
                           {"g_se", vector_json(m.propagator.g_std_errors())},
                           {"table", vector_json(m.propagator.table)}};
    }
    j["sigma2_bp2"] = m.sigma2_bp2;
    j["delta_bp"] = m.delta_bp;
    j["r_squared"] = m.r_squared;
    j["mean_volume"] = m.mean_volume;
    j["intervals_per_day"] = m.intervals_per_day;
    j["intervals"] = m.intervals;
    return j;
}

CalibratedModel calibrated_model_from_json(const Json& j) {
    check_version(j, "calibrated_model");
    CalibratedModel m;
    m.scheme = j.contains("scheme") ? scheme_from_json(j.at("scheme")) : AggregationScheme{RealTime{}};

    const Json& impact = field(j, "impact");
    const auto form = get_or<std::string>(impact, "form", "linear");
    if (form != "linear" && form != "arctan") {
        fail(ErrorKind::SchemaMismatch, "unknown impact form '" + form + "'");
    }
    m.impact.form = form == "linear" ? ImpactForm::Linear : ImpactForm::Arctan;
    m.impact.theta_bp = get<double>(impact, "theta_bp");
    m.impact.theta_se = get_or(impact, "theta_se", 0.0);
    m.impact.rho = get_or(impact, "rho", 0.0);
    m.impact.rho_se = get_or(impact, "rho_se", 0.0);
    if (impact.contains("bins")) {
        for (const auto& b : impact.at("bins")) {
            m.impact.bins.push_back({get<double>(b, "center"), get<double>(b, "mean_return_bp"),
                                     get_or(b, "std_error_bp", 0.0), get<std::size_t>(b, "count")});
        }
    }

    const Json& kernel = field(j, "kernel");
    m.kernel_fit.gamma0 = get<double>(kernel, "gamma0");
    m.kernel_fit.l0 = get<double>(kernel, "l0");
    m.kernel_fit.beta = get<double>(kernel, "beta");
    m.kernel_fit.gamma0_se = get_or(kernel, "gamma0_se", 0.0);
    m.kernel_fit.l0_se = get_or(kernel, "l0_se", 0.0);
    m.kernel_fit.beta_se = get_or(kernel, "beta_se", 0.0);
    m.kernel_fit.residual_norm = get_or(kernel, "residual_norm", 0.0);
    m.kernel_fit.poor_fit = get_or(kernel, "poor_fit", false);
    (void)m.kernel_fit.kernel();  // validates the parameters

    if (j.contains("propagator")) {
        const Json& p = j.at("propagator");
        m.propagator.max_lag = get<int>(p, "max_lag");
        m.propagator.history = get_or(p, "history", m.propagator.max_lag - 1);
        m.propagator.rows = get_or<std::size_t>(p, "rows", 0);
        m.propagator.condition_number = get_or(p, "condition_number", 0.0);
        m.propagator.g = vector_from(p, "g");
        m.propagator.table = vector_from(p, "table");
        if (m.propagator.g.size() != m.propagator.max_lag || m.propagator.table.size() != m.propagator.max_lag + 1) {
            fail(ErrorKind::SchemaMismatch, "propagator arrays do not match max_lag");
        }
        const Eigen::VectorXd se =
            p.contains("g_se") ? vector_from(p, "g_se") : Eigen::VectorXd::Zero(m.propagator.max_lag);
        if (se.size() != m.propagator.max_lag) {
            fail(ErrorKind::SchemaMismatch, "propagator g_se does not match max_lag");
        }
        m.propagator.covariance = se.array().square().matrix().asDiagonal();
    }

    m.sigma2_bp2 = get<double>(j, "sigma2_bp2");
    m.delta_bp = get<double>(j, "delta_bp");
    m.r_squared = get_or(j, "r_squared", 0.0);
    m.mean_volume = get<double>(j, "mean_volume");
    m.intervals_per_day = get<int>(j, "intervals_per_day");
    m.intervals = get_or<std::size_t>(j, "intervals", 0);
    require(m.sigma2_bp2 >= 0.0, "model sigma2 must be non-negative");
    require(m.delta_bp >= 0.0, "model delta must be non-negative");
    require(m.mean_volume > 0.0, "model mean volume must be positive");
    require(m.intervals_per_day >= 1, "model intervals_per_day must be >= 1");
    return m;
}

Json cost_model_summary(const CostModel<double>& model) {
    const auto& d = model.definiteness();
    const Eigen::SelfAdjointEigenSolver<Matrix<double>> eig(model.symmetric_impact(), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    return {{"schema_version", kSchemaVersion},
            {"kind", "cost_model"},
            {"units", {{"theta", "bp"}, {"sigma2", "bp^2 per interval"}, {"delta", "bp"}, {"volume", "shares"}}},
            {"intervals", model.size()},
            {"theta_bp", model.theta()},
            {"kernel", to_json(model.kernel())},
            {"sigma2_bp2", model.noise_variance()},
            {"delta_bp", model.half_spread()},
            {"market_volume", vector_json(model.market_volume())},
            {"effective_propagator", vector_json(model.effective_propagator())},
            {"diagnostics",
             {{"positive_definite", d.positive_definite || model.theta() == 0.0},
              {"min_pivot", d.min_pivot},
              {"max_pivot", d.max_pivot},
              {"min_eigenvalue", lo},
              {"max_eigenvalue", hi},
              {"condition_number", lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()}}}};
}

void write_matrix_csv(std::ostream& out, const Matrix<double>& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out << ',';
            }
            write_number(out, m(i, j));
        }
        out << '\n';
    }
}

void write_schedule_csv(std::ostream& out, const Schedule<double>& v, const Vector<double>& volume) {
    const Vector<double> x = to_participation(v, volume);
    out << "interval,v,x\n";
    for (Index k = 0; k < v.size(); ++k) {
        out << k << ',';
        write_number(out, v(k));
        out << ',';
        write_number(out, x(k));
        out << '\n';
    }
}

Schedule<double> parse_schedule_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        fail(ErrorKind::MalformedInput, "empty schedule file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "interval,v,x" && line != "interval,v") {
        fail(ErrorKind::SchemaMismatch, "schedule header must be 'interval,v,x'");
    }
    std::vector<double> values;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") {
            continue;
        }
        std::istringstream fields(line);
        std::string index;
        std::string value;
        std::getline(fields, index, ',');
        std::getline(fields, value, ',');
        try {
            std::size_t used = 0;
            const long k = std::stol(index);
            const double v = std::stod(value, &used);
            if (k != static_cast<long>(values.size()) || !std::isfinite(v)) {
                throw std::invalid_argument("order");
            }
            values.push_back(v);
        } catch (const std::exception&) {
            fail(ErrorKind::MalformedInput, "schedule row " + std::to_string(row) + " is malformed or out of order");
        }
    }
    return Eigen::Map<const Schedule<double>>(values.data(), static_cast<Index>(values.size()));
}

Json to_json(const SolveDiagnostics& d) {
    return {{"path", to_string(d.path)},
            {"converged", d.converged},
            {"iterations", d.iterations},
            {"outer_iterations", d.outer_iterations},
            {"stationarity", d.stationarity},
            {"objective", d.objective},
            {"constraint_residual", d.constraint_residual}};
}

Json to_json(const CostReport<double>& r) {
    Json j = {{"expected_impact_cost", r.expected_impact_cost},
              {"expected_spread_cost", r.expected_spread_cost},
              {"expected_cost", r.expected_cost()},
              {"variance", r.variance},
              {"lambda", r.lambda},
              {"objective", r.objective}};
    j["fractional_impact_bp"] = r.fractional_impact ? Json(*r.fractional_impact) : Json(nullptr);
    j["fractional_spread_bp"] = r.fractional_spread ? Json(*r.fractional_spread) : Json(nullptr);
    if (!r.fractional_impact) {
        j["fractional_note"] = "undefined: ZeroTotalVolume";
    }
    return j;
}

void write_frontier_csv(std::ostream& out, const std::vector<FrontierPoint<double>>& propagator,
                        const std::vector<FrontierPoint<double>>& almgren_chriss) {
    out << "curve,lambda,variance,expected_cost,impact_cost,spread_cost,status\n";
    auto rows = [&out](const char* curve, const std::vector<FrontierPoint<double>>& points) {
        for (const auto& p : points) {
            out << curve << ',';
            write_number(out, p.lambda);
            if (p.error) {
                std::string msg = *p.error;
                std::replace(msg.begin(), msg.end(), ',', ';');
                out << ",,,,," << msg << '\n';
                continue;
            }
            for (double x : {p.variance, p.expected_cost, p.impact_cost, p.spread_cost}) {
                out << ',';
                write_number(out, x);
            }
            out << ',' << (p.diagnostics.converged ? "ok" : "not_converged") << '\n';
        }
    };
    rows("propagator", propagator);
    rows("almgren_chriss", almgren_chriss);
}

void write_frontier_curve_csv(std::ostream& out, const std::vector<FrontierPoint<double>>& points) {
    out << "variance,expected_cost\n";
    for (const auto& p : points) {
        if (p.error) {
            continue;
        }
        write_number(out, p.variance);
        out << ',';
        write_number(out, p.expected_cost);
        out << '\n';
    }
}

Json to_json(const MarketSpec& s) {
    Json magnitude = {{"law", s.magnitude == MagnitudeLaw::Uniform ? "uniform" : "power_law"}};
    if (s.magnitude == MagnitudeLaw::PowerLaw) {
        magnitude["exponent"] = s.power_law_exponent;
        magnitude["floor"] = s.power_law_floor;
    }
    Json noise = {{"law", s.noise == NoiseLaw::Gaussian ? "gaussian" : "student_t"}};
    if (s.noise == NoiseLaw::StudentT) {
        noise["dof"] = s.student_dof;
    }
    return {{"schema_version", kSchemaVersion},
            {"kind", "market_spec"},
            {"theta_bp", s.theta_bp},
            {"kernel", to_json(s.kernel)},
            {"sigma_bp", s.sigma_bp},
            {"volume", s.volume},
            {"persistence", s.persistence},
            {"magnitude", magnitude},
            {"noise", noise},
            {"intervals_per_day", s.intervals_per_day},
            {"days", s.days},
            {"seed", s.seed},
            {"scheme", to_json(s.scheme)},
            {"initial_price", s.initial_price}};
}

MarketSpec market_spec_from_json(const Json& j) {
    check_version(j, "market_spec");
    MarketSpec s;
    s.theta_bp = get<double>(j, "theta_bp");
    s.kernel = kernel_from_json(field(j, "kernel"));
    s.sigma_bp = get<double>(j, "sigma_bp");
    s.volume = get_or(j, "volume", s.volume);
    s.persistence = get_or(j, "persistence", 0.0);
    if (j.contains("magnitude")) {
        const Json& m = j.at("magnitude");
        const auto law = get<std::string>(m, "law");
        if (law == "power_law") {
            s.magnitude = MagnitudeLaw::PowerLaw;
            s.power_law_exponent = get_or(m, "exponent", s.power_law_exponent);
            s.power_law_floor = get_or(m, "floor", s.power_law_floor);
        } else if (law != "uniform") {
            fail(ErrorKind::SchemaMismatch, "unknown magnitude law '" + law + "'");
        }
    }
    if (j.contains("noise")) {
        const Json& n = j.at("noise");
        const auto law = get<std::string>(n, "law");
        if (law == "student_t") {
            s.noise = NoiseLaw::StudentT;
            s.student_dof = get_or(n, "dof", s.student_dof);
        } else if (law != "gaussian") {
            fail(ErrorKind::SchemaMismatch, "unknown noise law '" + law + "'");
        }
    }
    s.intervals_per_day = get<int>(j, "intervals_per_day");
    s.days = get_or(j, "days", 1);
    s.seed = get_or<std::uint64_t>(j, "seed", 1);
    if (j.contains("scheme")) {
        s.scheme = scheme_from_json(j.at("scheme"));
    }
    s.initial_price = get_or(j, "initial_price", s.initial_price);
    s.validate();
    return s;
}

Json to_json(const ExecutionSimulation& sim) {
    return {{"paths", sim.paths},
            {"mean", sim.mean},
            {"variance", sim.variance},
            {"mean_se", sim.mean_se},
            {"variance_se", sim.variance_se},
            {"deterministic_cost", sim.deterministic_cost}};
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::Io, "cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::MalformedInput, path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::Io, "cannot write " + path.string());
    }
    out << text;
    if (!out) {
        fail(ErrorKind::Io, "failed writing " + path.string());
    }
}

}  // namespace texec
