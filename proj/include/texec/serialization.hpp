#pragma once

// JSON and CSV formats for models, schedules, frontiers and simulation
// reports. Every JSON document carries a schema_version.

#include "texec/calibration.hpp"
#include "texec/impact_model.hpp"
#include "texec/optimizer.hpp"
#include "texec/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace texec {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

Json to_json(const AggregationScheme& scheme);
AggregationScheme scheme_from_json(const Json& j);

/// Model document. `propagator`, `bins` and standard errors are optional on
/// input, so hand-written models only need theta, kernel, sigma2, delta,
/// mean volume and intervals per day.
Json to_json(const CalibratedModel& model);
CalibratedModel calibrated_model_from_json(const Json& j);

Json to_json(const PropagatorKernel<double>& kernel);
Json cost_model_summary(const CostModel<double>& model);
void write_matrix_csv(std::ostream& out, const Matrix<double>& m);

/// `interval,v,x` with x = v / W_k.
void write_schedule_csv(std::ostream& out, const Schedule<double>& v, const Vector<double>& volume);
Schedule<double> parse_schedule_csv(std::istream& in);

Json to_json(const SolveDiagnostics& d);
Json to_json(const CostReport<double>& report);

/// Full frontier table: `curve,lambda,variance,expected_cost,impact_cost,spread_cost,status`.
void write_frontier_csv(std::ostream& out, const std::vector<FrontierPoint<double>>& propagator,
                        const std::vector<FrontierPoint<double>>& almgren_chriss);
/// Plot-ready `variance,expected_cost`, failed points skipped.
void write_frontier_curve_csv(std::ostream& out, const std::vector<FrontierPoint<double>>& points);

Json to_json(const MarketSpec& spec);
MarketSpec market_spec_from_json(const Json& j);

Json to_json(const ExecutionSimulation& sim);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace texec
