#ifndef KCFGRL_ENV_HPP
#define KCFGRL_ENV_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kcfgrl/config_space.hpp"
#include "kcfgrl/reward.hpp"

namespace kcfgrl {

struct KernelState {
  Assignment assignment;
  std::string workload;
  std::map<std::string, double> metrics;  // last observed performance
  std::uint64_t bench_seed = 0;           // benchmark seed for this episode

  friend bool operator==(const KernelState&, const KernelState&) = default;
};

// One configuration modification proposed by the policy, addressed to a
// group of the episode's group list. format_ok carries the emission's
// format-reward bit alongside the parsed answer.
struct Action {
  std::size_t group_index = 0;
  std::optional<Answer> answer;  // nullopt = unparseable emission
  bool format_ok = true;
};

struct Transition {
  KernelState state;
  Action action;
  RewardBreakdown reward;
  KernelState next_state;
};

struct KnowledgeBase {
  std::map<std::string, std::string> entries;

  // Per-symbol help text plus dependency summaries derived from the space.
  static KnowledgeBase from_space(const ConfigSpace& space);
  static KnowledgeBase load_file(const std::string& path);  // JSONL {"key","text"}
};

// Exact-key lookup; absence is in-band.
std::optional<std::string> kb_query(const KnowledgeBase& kb, const std::string& query);

// Deterministic stand-in for building and benchmarking a kernel: a seeded
// linear model over (symbol, value) indicator features plus interaction
// terms over dependency edges. Strictly positive, and brute-forceable on
// small spaces. Throws on a dependency-invalid assignment.
std::map<std::string, double> synthetic_benchmark(const ConfigSpace& space,
                                                  const Assignment& assignment,
                                                  const std::string& workload,
                                                  std::uint64_t seed);

// The single headline metric produced by the synthetic benchmark.
inline constexpr const char* kScoreMetric = "score";

// Every coefficient of the synthetic benchmark for (workload, seed): the
// base offset, one weight per (symbol, value), and one weight per
// (dependency edge, joint value) pair. Oracles recompute scores from this
// fixture without touching the benchmark itself.
nlohmann::json benchmark_coefficients(const ConfigSpace& space, const std::string& workload,
                                      std::uint64_t seed);
void dump_benchmark_fixture(const ConfigSpace& space, const std::string& workload,
                            std::uint64_t seed, const std::string& path);

// Assignment delta implied by a typed answer. Bool assigns the stated value;
// Value assigns the literal; Choice/Menu assign each selected symbol its
// selection value.
std::map<std::string, Literal> answer_modification(const ConfigSpace& space, const Answer& answer);

// Scoring oracle contract: prices a configuration modification against its
// baseline for a tuning target. A judge model or a real benchmark run sits
// behind this seam; the default implementation is the synthetic benchmark.
class PerfJudge {
 public:
  virtual ~PerfJudge() = default;
  virtual PerfObservation judge(const Assignment& baseline, const Assignment& proposed,
                                const ConfigGroup& target) const = 0;
};

// Deterministic judge over the synthetic benchmark: one entry per call with
// c_config = number of symbols whose value changed and c_max = the target's
// candidate count.
class SyntheticBenchmarkJudge : public PerfJudge {
 public:
  SyntheticBenchmarkJudge(const ConfigSpace& space, std::string workload, std::uint64_t seed,
                          double lambda = 0.0);
  PerfObservation judge(const Assignment& baseline, const Assignment& proposed,
                        const ConfigGroup& target) const override;

 private:
  const ConfigSpace& space_;
  std::string workload_;
  std::uint64_t seed_;
  double lambda_;
};

class KernelEnv {
 public:
  KernelEnv(const ConfigSpace& space, std::vector<ConfigGroup> groups, std::string workload,
            std::uint64_t seed, double lambda = 0.0);
  // Substitutes a custom scoring oracle for the synthetic default.
  KernelEnv(const ConfigSpace& space, std::vector<ConfigGroup> groups, std::string workload,
            std::uint64_t seed, std::shared_ptr<const PerfJudge> judge);

  // Deterministic initial state: every symbol at its default value, pruned
  // to the maximal dependency-valid subset; metrics from the synthetic
  // benchmark of that assignment.
  KernelState reset() const;

  // Applies the action when the answer is valid and the resulting
  // assignment dependency-valid; otherwise leaves the state untouched with
  // r_answer = 0 and r_perf = 0. Never throws on bad actions: invalid
  // proposals are reward-punished in-band.
  Transition step(const KernelState& state, const Action& action,
                  const RewardWeights& weights) const;

  const ConfigSpace& space() const { return space_; }
  const std::vector<ConfigGroup>& groups() const { return groups_; }
  std::uint64_t seed() const { return seed_; }

 private:
  const ConfigSpace& space_;
  std::vector<ConfigGroup> groups_;
  std::string workload_;
  std::uint64_t seed_;
  std::shared_ptr<const PerfJudge> judge_;
};

// Exhaustive argmax of the synthetic benchmark over all dependency-valid
// total assignments. Intended for small spaces (product of domains bounded
// by ~2^20); used by evaluation tooling and tests.
std::pair<Assignment, double> brute_force_optimum(const ConfigSpace& space,
                                                  const std::string& workload,
                                                  std::uint64_t seed);

}  // namespace kcfgrl

#endif
