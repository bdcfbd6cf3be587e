#ifndef KCFGRL_BENCH_HPP
#define KCFGRL_BENCH_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace kcfgrl {

struct BenchEntry {
  std::string test;
  double measured = 0.0;   // > 0
  double reference = 0.0;  // > 0
};

struct BenchReport {
  std::vector<BenchEntry> entries;
  double aggregate = 0.0;

  nlohmann::json to_json() const;
};

// Aggregate index: per-test measured/reference ratios combined by geometric
// mean, scaled by 100. A single entry reduces exactly to
// measured/reference * 100. Throws on nonpositive scores.
double unixbench_score(const std::vector<BenchEntry>& entries);

BenchReport make_bench_report(std::vector<BenchEntry> entries);

// Reads the metrics CSV with header "test,measured,reference".
std::vector<BenchEntry> read_metrics_csv(std::istream& in);
std::vector<BenchEntry> read_metrics_csv_file(const std::string& path);

// Inputs for the six analysis ratios; each pair is numerator/denominator.
struct AnalysisInputs {
  double performance_improvement = 0.0;
  double resource_utilization_used = 0.0;  // denominator of performance efficiency
  double time_to_target = 0.0;
  double iterations = 0.0;
  double perf_larger_workload = 0.0;
  double perf_smaller_workload = 0.0;
  double valid_configurations = 0.0;
  double total_configurations = 0.0;
  double performance_gain = 0.0;
  double training_data_usage = 0.0;
  double resources_used = 0.0;
  double resources_available = 0.0;
};

struct AnalysisRatios {
  double performance_efficiency = 0.0;  // improvement / utilization
  double adaptation_speed = 0.0;        // time to target / iterations
  double scaling_factor = 0.0;          // larger / smaller workload perf
  double configuration_accuracy = 0.0;  // valid / total
  double learning_efficiency = 0.0;     // gain / data usage
  double resource_utilization = 0.0;    // used / available

  nlohmann::json to_json() const;
};

// Computes the six ratios; throws on a zero denominator.
AnalysisRatios analysis_ratios(const AnalysisInputs& in);

}  // namespace kcfgrl

#endif
