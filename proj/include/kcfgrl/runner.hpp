#ifndef KCFGRL_RUNNER_HPP
#define KCFGRL_RUNNER_HPP

#include <cstdint>
#include <string>

#include "kcfgrl/dataset.hpp"
#include "kcfgrl/trainer.hpp"

namespace kcfgrl {

// File-level entry points behind the train/evaluate/validate/score commands.
// Each returns the run manifest / report as JSON; artifacts are written
// under the caller-supplied paths. Reruns with identical inputs and seed
// produce byte-identical checkpoints, curves and assignment files.

struct TrainPaths {
  std::string space_path;      // recorded in the manifest
  std::string dataset_path;    // recorded in the manifest
  std::string out_dir;         // receives params.ckpt, curve.csv, manifest.json
  std::string checkpoint_in;   // optional warm-start checkpoint
};

nlohmann::json run_training(const ConfigSpace& space, const Dataset& dataset,
                            const TrainConfig& config, std::uint64_t seed,
                            const TrainPaths& paths);

struct EvalPaths {
  std::string checkpoint;
  std::string assignment_out;  // JSONL {"symbol","value"} per line
  std::string report_out;      // optional; JSON report copy
};

nlohmann::json run_evaluation(const ConfigSpace& space, const Dataset& dataset,
                              std::uint64_t seed, const EvalPaths& paths);

// Per-line validation report for a dataset file: {"ok", "groups", "lines":[...]}.
nlohmann::json validate_report(const ConfigSpace& space, const std::string& dataset_path);

// BenchReport JSON for a metrics CSV.
nlohmann::json score_report(const std::string& csv_path);

}  // namespace kcfgrl

#endif
