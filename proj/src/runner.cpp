#include "kcfgrl/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "kcfgrl/bench.hpp"
#include "kcfgrl/error.hpp"

namespace kcfgrl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write '" + path + "'");
  out << text;
}

}  // namespace

json run_training(const ConfigSpace& space, const Dataset& dataset, const TrainConfig& config,
                  std::uint64_t seed, const TrainPaths& paths) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();

  const ActionTable table = ActionTable::build(space, dataset.groups());
  PolicyParams params;
  if (!paths.checkpoint_in.empty()) {
    params = load_params(paths.checkpoint_in);
    if (params.theta.size() != table.total_dim())
      throw_usage("checkpoint dimension " + std::to_string(params.theta.size()) +
                  " does not match dataset action space " + std::to_string(table.total_dim()));
  } else {
    params = init_params(table, SplitMix64(seed).fork("init").next_u64());
  }

  RunResult result = config.phase == TrainPhase::Warmup
                         ? run_warmup(dataset, space, std::move(params), config, seed)
                         : run_exploration(dataset, space, std::move(params), config, seed);

  fs::create_directories(paths.out_dir);
  const std::string ckpt_path = (fs::path(paths.out_dir) / "params.ckpt").string();
  const std::string curve_path = (fs::path(paths.out_dir) / "curve.csv").string();
  const std::string manifest_path = (fs::path(paths.out_dir) / "manifest.json").string();

  save_params(result.params, ckpt_path);
  write_text_file(curve_path, curve_to_csv(result.curve));

  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  json manifest{{"command", "train"},
                {"config", config.to_json()},
                {"seed", seed},
                {"inputs",
                 {{"space", paths.space_path},
                  {"dataset", paths.dataset_path},
                  {"checkpoint_in", paths.checkpoint_in}}},
                {"outputs", {{"checkpoint", ckpt_path}, {"curve", curve_path}}},
                {"groups", dataset.size()},
                {"action_dim", table.total_dim()},
                {"curve_points", result.curve.size()},
                {"final_explore_eps", result.final_explore_eps},
                {"kb_queries", result.kb_queries},
                {"kb_hits", result.kb_hits},
                {"timing_ms", elapsed}};
  write_text_file(manifest_path, manifest.dump(2) + "\n");
  return manifest;
}

json run_evaluation(const ConfigSpace& space, const Dataset& dataset, std::uint64_t seed,
                    const EvalPaths& paths) {
  const std::vector<ConfigGroup> groups = dataset.groups();
  const ActionTable table = ActionTable::build(space, groups);
  PolicyParams params = load_params(paths.checkpoint);
  if (params.theta.size() != table.total_dim())
    throw_usage("checkpoint dimension " + std::to_string(params.theta.size()) +
                " does not match dataset action space " + std::to_string(table.total_dim()));

  const KernelEnv env(space, groups, "default", seed);
  const KernelState initial = env.reset();
  const double score_base = initial.metrics.at(kScoreMetric);

  Assignment current = initial.assignment;
  double score_current = score_base;
  PerfObservation obs;
  double n_valid = 0.0;
  json per_group = json::array();

  for (std::size_t i = 0; i < groups.size(); ++i) {
    const std::size_t k = greedy_answer_index(params, table, i);
    const Answer& answer = table.answers[i][k];

    bool applied = false;
    bool valid = answer_reward(groups[i], answer, space) == 1.0;
    if (valid) {
      Assignment proposed = current;
      std::size_t n_changed = 0;
      for (const auto& [name, value] : answer_modification(space, answer)) {
        auto it = proposed.values.find(name);
        if (it == proposed.values.end() || it->second != value) ++n_changed;
        proposed.values[name] = value;
      }
      if (check_dependencies(space, proposed).empty()) {
        const double next_score =
            synthetic_benchmark(space, proposed, "default", seed).at(kScoreMetric);
        obs.entries.push_back(PerfEntry{score_current, next_score, 0.0,
                                        static_cast<double>(n_changed),
                                        static_cast<double>(std::max<std::size_t>(
                                            groups[i].candidates.size(), 1))});
        current = std::move(proposed);
        score_current = next_score;
        applied = true;
      } else {
        valid = false;
      }
    }
    if (valid) n_valid += 1.0;
    per_group.push_back(json{{"group", i},
                             {"answer", answer_to_json(answer)},
                             {"valid", valid},
                             {"applied", applied}});
  }

  // Complete config file: one {"symbol","value"} record per line.
  std::string assignment_text;
  for (const auto& [name, value] : current.values) {
    assignment_text += json{{"symbol", name}, {"value", value.to_json()}}.dump();
    assignment_text += '\n';
  }
  if (!paths.assignment_out.empty()) write_text_file(paths.assignment_out, assignment_text);

  json report{{"command", "evaluate"},
              {"seed", seed},
              {"groups", groups.size()},
              {"validity_rate", groups.empty() ? 0.0 : n_valid / static_cast<double>(groups.size())},
              {"score_base", score_base},
              {"score_tuned", score_current},
              {"perf_gain", score_current - score_base},
              {"perf_gain_pct", (score_current - score_base) / score_base * 100.0},
              {"r_perf", obs.entries.empty() ? 0.0 : perf_reward(obs)},
              {"per_group", per_group},
              {"assignment_out", paths.assignment_out}};
  if (!paths.report_out.empty()) write_text_file(paths.report_out, report.dump(2) + "\n");
  return report;
}

json validate_report(const ConfigSpace& space, const std::string& dataset_path) {
  std::ifstream in(dataset_path);
  if (!in) throw_io("cannot open dataset file '" + dataset_path + "'");
  const std::vector<LineReport> reports = validate_dataset_lines(in, space);

  bool all_ok = true;
  json lines = json::array();
  for (const auto& r : reports) {
    all_ok = all_ok && r.ok;
    lines.push_back(json{{"line", r.line}, {"ok", r.ok}, {"violations", r.violations}});
  }
  return json{{"command", "validate"},
              {"dataset", dataset_path},
              {"ok", all_ok},
              {"groups", reports.size()},
              {"lines", lines}};
}

json score_report(const std::string& csv_path) {
  return make_bench_report(read_metrics_csv_file(csv_path)).to_json();
}

}  // namespace kcfgrl
