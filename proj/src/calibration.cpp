#include "texec/calibration.hpp"

#include "texec/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace texec {

namespace {

struct BinnedData {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd weight;
    Eigen::VectorXd variance;  // of each bin mean
};

/// Sandwich covariance of a weighted fit through bin means. Each original
/// point shows up twice after pooling, hence the factor 2.
Eigen::MatrixXd binned_fit_covariance(const BinnedData& b, const Eigen::MatrixXd& jac) {
    const Index p = jac.cols();
    Eigen::MatrixXd bread = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
    for (Index i = 0; i < jac.rows(); ++i) {
        const Eigen::VectorXd j = jac.row(i).transpose();
        bread += b.weight(i) * j * j.transpose();
        meat += b.weight(i) * b.weight(i) * b.variance(i) * j * j.transpose();
    }
    const Eigen::MatrixXd inv = bread.completeOrthogonalDecomposition().pseudoInverse();
    return 2.0 * inv * meat * inv;
}

double arctan_projection(const BinnedData& b, double rho, double& theta) {
    const Eigen::VectorXd a = (rho * b.x.array()).atan().matrix();
    const double denom = (b.weight.array() * a.array().square()).sum();
    if (denom <= 0.0) {
        theta = 0.0;
        return (b.weight.array() * b.y.array().square()).sum();
    }
    theta = (b.weight.array() * a.array() * b.y.array()).sum() / denom;
    return (b.weight.array() * (b.y - theta * a).array().square()).sum();
}

// ---- kernel fit -----------------------------------------------------------

struct KernelParams {
    double gamma0;
    double l0;
    double beta;
};

constexpr double kMaxBeta = 2.0 - 1e-9;

Eigen::VectorXd kernel_values(const KernelParams& p, const Eigen::VectorXd& lags) {
    return (p.gamma0 * (p.l0 * p.l0 + lags.array().square()).pow(-0.5 * p.beta)).matrix();
}

Eigen::MatrixXd kernel_jacobian(const KernelParams& p, const Eigen::VectorXd& lags) {
    Eigen::MatrixXd jac(lags.size(), 3);
    for (Index i = 0; i < lags.size(); ++i) {
        const double u = p.l0 * p.l0 + lags(i) * lags(i);
        const double h = std::pow(u, -0.5 * p.beta);
        jac(i, 0) = h;
        jac(i, 1) = -p.gamma0 * p.beta * p.l0 * h / u;
        jac(i, 2) = -0.5 * p.gamma0 * h * std::log(u);
    }
    return jac;
}

double kernel_cost(const KernelParams& p, const Eigen::VectorXd& lags, const Eigen::VectorXd& y) {
    return (y - kernel_values(p, lags)).squaredNorm();
}

KernelParams project_amplitude(double l0, double beta, const Eigen::VectorXd& lags, const Eigen::VectorXd& y) {
    const Eigen::VectorXd h = kernel_values({1.0, l0, beta}, lags);
    return {h.dot(y) / h.squaredNorm(), l0, beta};
}

KernelParams clamp_params(KernelParams p) {
    p.l0 = std::abs(p.l0);
    p.beta = std::clamp(p.beta, 0.0, kMaxBeta);
    return p;
}

KernelParams levenberg_marquardt(KernelParams p, const Eigen::VectorXd& lags, const Eigen::VectorXd& y) {
    double cost = kernel_cost(p, lags, y);
    double damping = 1e-3;
    for (int iter = 0; iter < 500; ++iter) {
        const Eigen::MatrixXd jac = kernel_jacobian(p, lags);
        const Eigen::VectorXd res = y - kernel_values(p, lags);
        const Eigen::Matrix3d jtj = jac.transpose() * jac;
        const Eigen::Vector3d grad = jac.transpose() * res;
        const double floor = 1e-12 * std::max(jtj.diagonal().maxCoeff(), 1e-300);

        bool accepted = false;
        while (damping < 1e16) {
            Eigen::Matrix3d lhs = jtj;
            lhs.diagonal() += damping * jtj.diagonal().cwiseMax(floor);
            const Eigen::Vector3d step = lhs.ldlt().solve(grad);
            const KernelParams trial =
                clamp_params({p.gamma0 + step(0), p.l0 + step(1), p.beta + step(2)});
            const double trial_cost = trial.gamma0 > 0.0 ? kernel_cost(trial, lags, y)
                                                         : std::numeric_limits<double>::infinity();
            if (std::isfinite(trial_cost) && trial_cost <= cost) {
                const double change = std::abs(trial.gamma0 - p.gamma0) + std::abs(trial.l0 - p.l0) +
                                      std::abs(trial.beta - p.beta);
                const double scale = std::abs(p.gamma0) + std::abs(p.l0) + std::abs(p.beta);
                const double improvement = cost - trial_cost;
                p = trial;
                cost = trial_cost;
                damping = std::max(damping / 3.0, 1e-12);
                accepted = true;
                if (change <= 1e-15 * scale || improvement <= 1e-30 + 1e-16 * cost) {
                    return p;
                }
                break;
            }
            damping *= 4.0;
        }
        if (!accepted) {
            break;
        }
    }
    return p;
}

}  // namespace

std::string to_string(ImpactForm form) {
    return form == ImpactForm::Linear ? "linear" : "arctan";
}

double ImpactFunctionFit::regressor(const Interval& iv) const {
    return form == ImpactForm::Linear ? iv.v_nor : iv.v;
}

double ImpactFunctionFit::evaluate(double x) const {
    return form == ImpactForm::Linear ? theta_bp * x : theta_bp * std::atan(rho * x);
}

ImpactFunctionFit estimate_impact_function(const IntervalSeries& series, int n_bins, ImpactForm form) {
    require(!series.empty(), "impact fit needs a non-empty series");
    require(n_bins >= 3, "impact fit needs at least 3 bins");

    ImpactFunctionFit fit;
    fit.form = form;

    std::vector<std::pair<double, double>> pooled;
    pooled.reserve(2 * series.size());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& iv : series.intervals) {
        const double x = fit.regressor(iv);
        const double y = iv.r * kBasisPoints;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        pooled.emplace_back(x, y);
        pooled.emplace_back(-x, -y);
    }
    if (!(hi > lo)) {
        fail(ErrorKind::DegenerateBins, "all imbalances are equal; cannot bin the impact function");
    }
    require(static_cast<std::size_t>(n_bins) <= pooled.size(), "more bins than observations");
    std::sort(pooled.begin(), pooled.end());

    BinnedData binned;
    binned.x.resize(n_bins);
    binned.y.resize(n_bins);
    binned.weight.resize(n_bins);
    binned.variance.resize(n_bins);
    const std::size_t total = pooled.size();
    for (int b = 0; b < n_bins; ++b) {
        const std::size_t begin = total * static_cast<std::size_t>(b) / static_cast<std::size_t>(n_bins);
        const std::size_t end = total * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(n_bins);
        const auto n = static_cast<double>(end - begin);
        double sx = 0.0;
        double sy = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            sx += pooled[i].first;
            sy += pooled[i].second;
        }
        const double mx = sx / n;
        const double my = sy / n;
        double ss = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            ss += (pooled[i].second - my) * (pooled[i].second - my);
        }
        const double var_mean = n > 1.0 ? ss / (n - 1.0) / n : 0.0;
        binned.x(b) = mx;
        binned.y(b) = my;
        binned.weight(b) = n;
        binned.variance(b) = var_mean;
        fit.bins.push_back({mx, my, std::sqrt(var_mean), end - begin});
    }

    if (form == ImpactForm::Linear) {
        const double sxx = (binned.weight.array() * binned.x.array().square()).sum();
        fit.theta_bp = (binned.weight.array() * binned.x.array() * binned.y.array()).sum() / sxx;
        const Eigen::MatrixXd cov = binned_fit_covariance(binned, binned.x);
        fit.theta_se = std::sqrt(std::max(cov(0, 0), 0.0));
        return fit;
    }

    std::vector<double> magnitudes;
    for (Index b = 0; b < binned.x.size(); ++b) {
        if (binned.x(b) != 0.0) {
            magnitudes.push_back(std::abs(binned.x(b)));
        }
    }
    std::nth_element(magnitudes.begin(), magnitudes.begin() + magnitudes.size() / 2, magnitudes.end());
    const double scale = 1.0 / magnitudes[magnitudes.size() / 2];

    constexpr int kGrid = 61;
    std::array<double, kGrid> costs{};
    int best = 0;
    for (int i = 0; i < kGrid; ++i) {
        double theta = 0.0;
        costs[i] = arctan_projection(binned, scale * std::pow(10.0, -3.0 + 0.1 * i), theta);
        if (costs[i] < costs[best]) {
            best = i;
        }
    }
    if (best == 0 || best == kGrid - 1) {
        fit.warnings.push_back(best == 0 ? "arctan fit at the linear limit of the search range"
                                         : "arctan fit at the saturation limit of the search range");
    }
    // golden-section refinement in log(rho) between the grid neighbours
    double a = std::log(scale) + std::log(10.0) * (-3.0 + 0.1 * std::max(best - 1, 0));
    double c = std::log(scale) + std::log(10.0) * (-3.0 + 0.1 * std::min(best + 1, kGrid - 1));
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double theta = 0.0;
    double x1 = c - ratio * (c - a);
    double x2 = a + ratio * (c - a);
    double f1 = arctan_projection(binned, std::exp(x1), theta);
    double f2 = arctan_projection(binned, std::exp(x2), theta);
    for (int iter = 0; iter < 200 && c - a > 1e-12; ++iter) {
        if (f1 <= f2) {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - ratio * (c - a);
            f1 = arctan_projection(binned, std::exp(x1), theta);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (c - a);
            f2 = arctan_projection(binned, std::exp(x2), theta);
        }
    }
    fit.rho = std::exp(0.5 * (a + c));
    arctan_projection(binned, fit.rho, fit.theta_bp);
    if (!std::isfinite(fit.theta_bp) || !std::isfinite(fit.rho)) {
        fail(ErrorKind::FitDiverged, "arctan impact fit did not converge");
    }

    Eigen::MatrixXd jac(n_bins, 2);
    for (int b = 0; b < n_bins; ++b) {
        const double z = fit.rho * binned.x(b);
        jac(b, 0) = std::atan(z);
        jac(b, 1) = fit.theta_bp * binned.x(b) / (1.0 + z * z);
    }
    const Eigen::MatrixXd cov = binned_fit_covariance(binned, jac);
    fit.theta_se = std::sqrt(std::max(cov(0, 0), 0.0));
    fit.rho_se = std::sqrt(std::max(cov(1, 1), 0.0));
    return fit;
}

Eigen::MatrixXd EmpiricalPropagator::table_covariance() const {
    const Eigen::MatrixXd lower =
        Eigen::MatrixXd::Ones(max_lag, max_lag).triangularView<Eigen::Lower>();
    return lower * covariance * lower.transpose();
}

namespace {

struct Design {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};

Design build_design(const IntervalSeries& series, const ImpactFunctionFit& impact, int max_lag, int history) {
    std::vector<double> f(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        f[i] = impact(series.intervals[i]);
    }
    std::size_t rows = 0;
    const auto days = series.day_ranges();
    for (const auto& [b, e] : days) {
        if (e - b > static_cast<std::size_t>(history)) {
            rows += e - b - static_cast<std::size_t>(history);
        }
    }
    Design d{Eigen::MatrixXd(static_cast<Index>(rows), max_lag), Eigen::VectorXd(static_cast<Index>(rows))};
    Index row = 0;
    for (const auto& [b, e] : days) {
        for (std::size_t j = b + static_cast<std::size_t>(history); j < e; ++j) {
            for (int k = 0; k < max_lag; ++k) {
                d.x(row, k) = f[j - static_cast<std::size_t>(k)];
            }
            d.y(row) = series.intervals[j].r * kBasisPoints;
            ++row;
        }
    }
    return d;
}

int resolve_history(int max_lag, std::optional<int> history) {
    const int h = history.value_or(max_lag - 1);
    require(h >= max_lag - 1, "regression history must cover max_lag - 1 lags");
    return h;
}

}  // namespace

EmpiricalPropagator regress_propagator(const IntervalSeries& series, const ImpactFunctionFit& impact, int max_lag,
                                       std::optional<int> history) {
    require(max_lag >= 1, "max_lag must be >= 1");
    const int h = resolve_history(max_lag, history);
    const Design d = build_design(series, impact, max_lag, h);
    const auto rows = static_cast<std::size_t>(d.y.size());
    if (rows < 10 * static_cast<std::size_t>(max_lag)) {
        fail(ErrorKind::InsufficientData, "propagator regression needs >= " + std::to_string(10 * max_lag) +
                                              " usable intervals, found " + std::to_string(rows));
    }

    const Eigen::MatrixXd gram = d.x.transpose() * d.x;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    const double cond = lmin > 0.0 ? std::sqrt(lmax / lmin) : std::numeric_limits<double>::infinity();
    if (!(cond < 1e7)) {
        std::ostringstream os;
        os << "propagator design is collinear (condition number " << cond << ")";
        fail(ErrorKind::SingularDesign, os.str());
    }

    EmpiricalPropagator emp;
    emp.max_lag = max_lag;
    emp.history = h;
    emp.rows = rows;
    emp.condition_number = cond;
    emp.g = d.x.colPivHouseholderQr().solve(d.y);
    emp.table = Eigen::VectorXd::Zero(max_lag + 1);
    for (int k = 0; k < max_lag; ++k) {
        emp.table(k + 1) = emp.table(k) + emp.g(k);
    }
    const Eigen::VectorXd res = d.y - d.x * emp.g;
    emp.ss_res = res.squaredNorm();
    emp.ss_tot = (d.y.array() - d.y.mean()).square().sum();
    const double s2 = emp.ss_res / static_cast<double>(rows - static_cast<std::size_t>(max_lag));
    const Eigen::MatrixXd& v = eig.eigenvectors();
    emp.covariance = s2 * v * eig.eigenvalues().cwiseInverse().asDiagonal() * v.transpose();
    return emp;
}

KernelFit fit_kernel(const EmpiricalPropagator& emp) {
    require(emp.max_lag >= 4, "kernel fit needs max_lag >= 4");
    const int n = emp.max_lag;
    const Eigen::VectorXd lags = Eigen::VectorXd::LinSpaced(n, 1.0, static_cast<double>(n));
    const Eigen::VectorXd y = emp.table.tail(n);

    static constexpr std::array kL0Grid{0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0};
    static constexpr std::array kBetaGrid{0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 1.9};

    std::optional<KernelParams> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (double l0 : kL0Grid) {
        for (double beta : kBetaGrid) {
            const KernelParams start = project_amplitude(l0, beta, lags, y);
            if (!(start.gamma0 > 0.0) || !std::isfinite(start.gamma0)) {
                continue;
            }
            const KernelParams p = levenberg_marquardt(start, lags, y);
            const double cost = kernel_cost(p, lags, y);
            if (!std::isfinite(cost)) {
                continue;
            }
            const double tie = 1e-12 * std::max(best_cost, 1e-300);
            const bool better = !best || cost < best_cost - tie ||
                                (cost <= best_cost + tie &&
                                 (p.l0 < best->l0 || (p.l0 == best->l0 && p.beta < best->beta)));
            if (better) {
                best = p;
                best_cost = cost;
            }
        }
    }
    if (!best) {
        fail(ErrorKind::FitDiverged, "kernel fit failed from every starting point (table not positive)");
    }

    KernelFit fit;
    fit.gamma0 = best->gamma0;
    fit.l0 = best->l0;
    fit.beta = best->beta;
    fit.residual_norm = std::sqrt(best_cost);
    const double rms_table = y.norm() / std::sqrt(static_cast<double>(n));
    fit.poor_fit = fit.residual_norm / std::sqrt(static_cast<double>(n)) > 0.1 * rms_table;

    if (emp.covariance.rows() == n) {
        const Eigen::MatrixXd jac = kernel_jacobian(*best, lags);
        const Eigen::MatrixXd bread = (jac.transpose() * jac).completeOrthogonalDecomposition().pseudoInverse();
        const Eigen::MatrixXd cov = bread * jac.transpose() * emp.table_covariance() * jac * bread;
        fit.gamma0_se = std::sqrt(std::max(cov(0, 0), 0.0));
        fit.l0_se = std::sqrt(std::max(cov(1, 1), 0.0));
        fit.beta_se = std::sqrt(std::max(cov(2, 2), 0.0));
    }
    return fit;
}

Eigen::VectorXd regression_residuals(const IntervalSeries& series, const ImpactFunctionFit& impact,
                                     const EmpiricalPropagator& emp) {
    const Design d = build_design(series, impact, emp.max_lag, emp.history);
    return d.y - d.x * emp.g;
}

double r_squared(const IntervalSeries& series, const ImpactFunctionFit& impact, const EmpiricalPropagator& emp) {
    const Design d = build_design(series, impact, emp.max_lag, emp.history);
    const double ss_res = (d.y - d.x * emp.g).squaredNorm();
    const double ss_tot = (d.y.array() - d.y.mean()).square().sum();
    if (ss_tot <= 0.0) {
        return ss_res <= 0.0 ? 1.0 : 0.0;
    }
    return std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
}

NoiseEstimate estimate_noise_variance(const IntervalSeries& series, const ImpactFunctionFit& impact,
                                      const EmpiricalPropagator& emp) {
    const Eigen::VectorXd res = regression_residuals(series, impact, emp);
    if (res.size() == 0) {
        fail(ErrorKind::InsufficientData, "no regression rows to estimate the noise variance");
    }
    return {res.squaredNorm() / static_cast<double>(res.size()), static_cast<std::size_t>(res.size())};
}

SpreadEstimate estimate_spread(const std::vector<QuoteRecord>& quotes, const Session& session) {
    std::vector<QuoteRecord> sorted = quotes;
    std::stable_sort(sorted.begin(), sorted.end(), [](const QuoteRecord& a, const QuoteRecord& b) {
        return a.day_id != b.day_id ? a.day_id < b.day_id : a.timestamp < b.timestamp;
    });

    SpreadEstimate out;
    double weighted = 0.0;
    double total_weight = 0.0;
    double plain = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const QuoteRecord& q = sorted[i];
        if (q.ask < q.bid) {
            ++out.crossed_quotes;
            continue;
        }
        const double rel = (q.ask - q.bid) / (q.ask + q.bid);
        ++out.quotes_used;
        plain += rel;

        const Timestamp midnight = day_start(q.timestamp);
        const Timestamp open = midnight + session.open;
        const Timestamp close = midnight + session.close;
        const bool has_next = i + 1 < sorted.size() && sorted[i + 1].day_id == q.day_id;
        const Timestamp until = has_next ? sorted[i + 1].timestamp : close;
        const double w = static_cast<double>(std::max<Timestamp>(0, std::min(until, close) - std::max(q.timestamp, open)));
        weighted += w * rel;
        total_weight += w;
    }
    if (out.quotes_used == 0) {
        fail(ErrorKind::InsufficientData, "no uncrossed quotes to estimate the spread");
    }
    // quotes entirely outside the session: fall back to a plain average
    const double delta = total_weight > 0.0 ? weighted / total_weight : plain / static_cast<double>(out.quotes_used);
    out.delta_bp = delta * kBasisPoints;
    return out;
}

PropagatorKernel<double> CalibratedModel::tabulated_kernel() const {
    const Eigen::VectorXd& t = propagator.table;
    return PropagatorKernel<double>::tabulated(std::vector<double>(t.data() + 1, t.data() + t.size()));
}

double CalibratedModel::linear_theta_bp() const {
    return impact.form == ImpactForm::Linear ? impact.theta_bp : impact.theta_bp * impact.rho * mean_volume;
}

CalibratedModel calibrate(const IntervalSeries& series, const SpreadEstimate& spread,
                          const CalibrationOptions& options) {
    CalibratedModel model;
    model.impact = estimate_impact_function(series, options.n_bins, options.form);
    model.propagator = regress_propagator(series, model.impact, options.max_lag);
    model.kernel_fit = fit_kernel(model.propagator);
    model.sigma2_bp2 = estimate_noise_variance(series, model.impact, model.propagator).sigma2_bp2;
    model.r_squared = r_squared(series, model.impact, model.propagator);
    model.delta_bp = spread.delta_bp;
    model.scheme = series.scheme;
    model.mean_volume = series.mean_volume();
    model.intervals_per_day = series.max_intervals_per_day();
    model.intervals = series.size();
    return model;
}

}  // namespace texec
