#include "kcfgrl/bench.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "kcfgrl/error.hpp"

namespace kcfgrl {

using nlohmann::json;

double unixbench_score(const std::vector<BenchEntry>& entries) {
  if (entries.empty()) throw_data("unixbench_score: no entries");
  for (const auto& e : entries) {
    if (!(e.measured > 0.0)) throw_data("unixbench_score: nonpositive measured score for '" +
                                        e.test + "'");
    if (!(e.reference > 0.0)) throw_data("unixbench_score: nonpositive reference score for '" +
                                         e.test + "'");
  }
  if (entries.size() == 1) return entries.front().measured / entries.front().reference * 100.0;

  double log_sum = 0.0;
  for (const auto& e : entries) log_sum += std::log(e.measured / e.reference);
  return std::exp(log_sum / static_cast<double>(entries.size())) * 100.0;
}

BenchReport make_bench_report(std::vector<BenchEntry> entries) {
  BenchReport report;
  report.aggregate = unixbench_score(entries);
  report.entries = std::move(entries);
  return report;
}

json BenchReport::to_json() const {
  json tests = json::array();
  for (const auto& e : entries) {
    tests.push_back(json{{"test", e.test},
                         {"measured", e.measured},
                         {"reference", e.reference},
                         {"index", e.measured / e.reference}});
  }
  return json{{"tests", tests}, {"aggregate", aggregate}};
}

std::vector<BenchEntry> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw_data("metrics CSV: empty document");
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  if (line != "test,measured,reference")
    throw_data("metrics CSV: expected header \"test,measured,reference\", got \"" + line + "\"");

  std::vector<BenchEntry> entries;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    BenchEntry e;
    std::string measured, reference;
    if (!std::getline(row, e.test, ',') || !std::getline(row, measured, ',') ||
        !std::getline(row, reference))
      throw_data("metrics CSV line " + std::to_string(lineno) + ": expected 3 fields");
    try {
      e.measured = std::stod(measured);
      e.reference = std::stod(reference);
    } catch (const std::exception&) {
      throw_data("metrics CSV line " + std::to_string(lineno) + ": non-numeric score");
    }
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw_data("metrics CSV: no data rows");
  return entries;
}

std::vector<BenchEntry> read_metrics_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open metrics CSV '" + path + "'");
  return read_metrics_csv(in);
}

namespace {

double ratio(double num, double den, const char* name) {
  if (den == 0.0) throw_data(std::string("analysis_ratios: zero denominator for ") + name);
  return num / den;
}

}  // namespace

AnalysisRatios analysis_ratios(const AnalysisInputs& in) {
  AnalysisRatios out;
  out.performance_efficiency =
      ratio(in.performance_improvement, in.resource_utilization_used, "performance efficiency");
  out.adaptation_speed = ratio(in.time_to_target, in.iterations, "adaptation speed");
  out.scaling_factor =
      ratio(in.perf_larger_workload, in.perf_smaller_workload, "scaling factor");
  out.configuration_accuracy =
      ratio(in.valid_configurations, in.total_configurations, "configuration accuracy");
  out.learning_efficiency =
      ratio(in.performance_gain, in.training_data_usage, "learning efficiency");
  out.resource_utilization =
      ratio(in.resources_used, in.resources_available, "resource utilization");
  return out;
}

json AnalysisRatios::to_json() const {
  return json{{"performance_efficiency", performance_efficiency},
              {"adaptation_speed", adaptation_speed},
              {"scaling_factor", scaling_factor},
              {"configuration_accuracy", configuration_accuracy},
              {"learning_efficiency", learning_efficiency},
              {"resource_utilization", resource_utilization}};
}

}  // namespace kcfgrl
