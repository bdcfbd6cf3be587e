// kcfg-rl: operator front end for the kernel-configuration tuning pipeline.
// Drives the shared library exclusively through its C interface.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kcfgrl.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;  // invalid data / usage
constexpr int kExitEnv = 2;     // I/O and environment failures

int exit_code_for(kcfgrl_status status) {
  switch (status) {
    case KCFGRL_OK: return kExitOk;
    case KCFGRL_ERR_DATA:
    case KCFGRL_ERR_USAGE: return kExitDomain;
    case KCFGRL_ERR_IO:
    case KCFGRL_ERR_INTERNAL: return kExitEnv;
  }
  return kExitEnv;
}

int fail(kcfgrl_status status) {
  std::cerr << "error: " << kcfgrl_last_error() << "\n";
  return exit_code_for(status);
}

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { kcfgrl_string_free(ptr); }
  std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

struct SpaceHandle {
  kcfgrl_space* ptr = nullptr;
  ~SpaceHandle() { kcfgrl_space_free(ptr); }
};

struct DatasetHandle {
  kcfgrl_dataset* ptr = nullptr;
  ~DatasetHandle() { kcfgrl_dataset_free(ptr); }
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("KCFG_RL_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return v;
    std::cerr << "warning: ignoring non-numeric KCFG_RL_SEED\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kcfg-rl: rule-reward GRPO tuning over kernel configuration spaces"};
  app.require_subcommand(1);

  std::string space_path, dataset_path, out_dir, checkpoint, metrics_path, phase;
  std::optional<std::uint64_t> seed_flag;
  bool from_scratch = false;

  // Training knobs (defaults mirror the library's TrainConfig).
  std::size_t group_size = 8, steps_per_episode = 8, episodes = 25;
  double clip_eps = 0.2, discount = 0.99, explore_eps = 0.2, explore_decay = 0.95;
  double lr = 0.1, smoothing = 1.0, format_noise = 0.0, lambda = 0.0;
  std::vector<double> weights{1.0, 1.0, 1.0};
  bool two_sided_clip = false;

  auto* validate = app.add_subcommand("validate", "check a dataset file against a config space");
  validate->add_option("--space", space_path, "config space JSONL")->required();
  validate->add_option("--dataset", dataset_path, "dataset JSONL")->required();

  auto* train = app.add_subcommand("train", "run one training phase");
  train->add_option("--space", space_path, "config space JSONL")->required();
  train->add_option("--dataset", dataset_path, "dataset JSONL")->required();
  train->add_option("--phase", phase, "warmup|explore")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seed", seed_flag, "master seed (fallback: KCFG_RL_SEED)");
  train->add_option("--checkpoint", checkpoint, "warm-start checkpoint");
  train->add_flag("--from-scratch", from_scratch, "allow explore without a warmup checkpoint");
  train->add_option("--group-size", group_size, "GRPO group size G");
  train->add_option("--clip-eps", clip_eps, "ratio clipping parameter");
  train->add_option("--discount", discount, "return discount factor");
  train->add_option("--explore-eps", explore_eps, "initial exploration rate");
  train->add_option("--explore-decay", explore_decay, "per-episode exploration decay");
  train->add_option("--lr", lr, "learning rate");
  train->add_option("--smoothing", smoothing, "target policy smoothing coefficient");
  train->add_option("--steps-per-episode", steps_per_episode, "steps per episode");
  train->add_option("--episodes", episodes, "episode count");
  train->add_option("--weights", weights, "reward weights alpha,beta,gamma")
      ->delimiter(',')
      ->expected(3);
  train->add_option("--format-noise", format_noise, "toy-policy malformed emission rate");
  train->add_option("--lambda", lambda, "modification complexity coefficient");
  train->add_flag("--two-sided-clip", two_sided_clip, "use conventional two-sided clipping");

  auto* evaluate = app.add_subcommand("evaluate", "greedy-decode a checkpoint over a dataset");
  evaluate->add_option("--space", space_path, "config space JSONL")->required();
  evaluate->add_option("--dataset", dataset_path, "dataset JSONL")->required();
  evaluate->add_option("--checkpoint", checkpoint, "policy checkpoint")->required();
  evaluate->add_option("--out", out_dir, "output directory")->required();
  evaluate->add_option("--seed", seed_flag, "benchmark seed (fallback: KCFG_RL_SEED)");

  auto* score = app.add_subcommand("score", "aggregate a benchmark metrics CSV");
  score->add_option("--metrics", metrics_path, "CSV with header test,measured,reference")
      ->required();
  score->add_option("--out", out_dir, "optional file for the report JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitDomain;
  }

  if (validate->parsed()) {
    SpaceHandle space;
    if (auto st = kcfgrl_space_load(space_path.c_str(), &space.ptr)) return fail(st);
    OwnedString report;
    int ok = 0;
    if (auto st = kcfgrl_validate(space.ptr, dataset_path.c_str(), &report.ptr, &ok))
      return fail(st);

    const auto parsed = nlohmann::json::parse(report.str());
    for (const auto& line : parsed["lines"]) {
      if (line["ok"].get<bool>()) continue;
      std::cout << "line " << line["line"].get<std::size_t>() << ":";
      for (const auto& v : line["violations"]) std::cout << " " << v.get<std::string>() << ";";
      std::cout << "\n";
    }
    std::cout << (ok ? "OK" : "INVALID") << " (" << parsed["groups"].get<std::size_t>()
              << " records)\n";
    return ok ? kExitOk : kExitDomain;
  }

  if (train->parsed()) {
    if (phase != "warmup" && phase != "explore") {
      std::cerr << "error: --phase must be warmup or explore\n";
      return kExitDomain;
    }
    if (phase == "explore" && checkpoint.empty() && !from_scratch) {
      std::cerr << "error: explore needs --checkpoint or --from-scratch\n";
      return kExitDomain;
    }

    SpaceHandle space;
    if (auto st = kcfgrl_space_load(space_path.c_str(), &space.ptr)) return fail(st);
    DatasetHandle dataset;
    if (auto st = kcfgrl_dataset_read(space.ptr, dataset_path.c_str(), &dataset.ptr))
      return fail(st);

    const nlohmann::json config{{"phase", phase},
                                {"group_size", group_size},
                                {"clip_eps", clip_eps},
                                {"discount", discount},
                                {"explore_eps", explore_eps},
                                {"explore_decay", explore_decay},
                                {"learning_rate", lr},
                                {"smoothing_coef", smoothing},
                                {"steps_per_episode", steps_per_episode},
                                {"episodes", episodes},
                                {"weights",
                                 {{"alpha", weights[0]},
                                  {"beta", weights[1]},
                                  {"gamma_perf", weights[2]}}},
                                {"format_noise", format_noise},
                                {"lambda", lambda},
                                {"two_sided_clip", two_sided_clip}};

    OwnedString manifest;
    if (auto st = kcfgrl_train(space.ptr, dataset.ptr, config.dump().c_str(),
                               resolve_seed(seed_flag), checkpoint.empty() ? "" : checkpoint.c_str(),
                               out_dir.c_str(), &manifest.ptr))
      return fail(st);
    std::cout << manifest.str() << "\n";
    return kExitOk;
  }

  if (evaluate->parsed()) {
    SpaceHandle space;
    if (auto st = kcfgrl_space_load(space_path.c_str(), &space.ptr)) return fail(st);
    DatasetHandle dataset;
    if (auto st = kcfgrl_dataset_read(space.ptr, dataset_path.c_str(), &dataset.ptr))
      return fail(st);

    const std::string assignment_out = out_dir + "/assignment.jsonl";
    OwnedString report;
    if (auto st = kcfgrl_evaluate(space.ptr, dataset.ptr, checkpoint.c_str(),
                                  resolve_seed(seed_flag), assignment_out.c_str(), &report.ptr))
      return fail(st);

    std::FILE* f = std::fopen((out_dir + "/report.json").c_str(), "wb");
    if (!f) {
      std::cerr << "error: cannot write report under '" << out_dir << "'\n";
      return kExitEnv;
    }
    std::fputs(report.str().c_str(), f);
    std::fputs("\n", f);
    std::fclose(f);
    std::cout << report.str() << "\n";
    return kExitOk;
  }

  if (score->parsed()) {
    OwnedString report;
    if (auto st = kcfgrl_score(metrics_path.c_str(), &report.ptr)) return fail(st);
    if (!out_dir.empty()) {
      std::FILE* f = std::fopen(out_dir.c_str(), "wb");
      if (!f) {
        std::cerr << "error: cannot write '" << out_dir << "'\n";
        return kExitEnv;
      }
      std::fputs(report.str().c_str(), f);
      std::fputs("\n", f);
      std::fclose(f);
    }
    std::cout << report.str() << "\n";
    return kExitOk;
  }

  return kExitDomain;
}
