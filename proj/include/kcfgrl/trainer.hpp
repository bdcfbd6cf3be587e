#ifndef KCFGRL_TRAINER_HPP
#define KCFGRL_TRAINER_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kcfgrl/dataset.hpp"
#include "kcfgrl/env.hpp"
#include "kcfgrl/policy.hpp"
#include "kcfgrl/reward.hpp"

namespace kcfgrl {

enum class TrainPhase { Warmup, Exploration };

struct TrainConfig {
  std::size_t group_size = 8;     // G, >= 2
  double clip_eps = 0.2;          // > 0
  double discount = 0.99;         // in [0,1]
  double explore_eps0 = 0.2;      // in [0,1]
  double explore_decay = 0.95;    // in (0,1]
  double learning_rate = 0.1;     // > 0
  double smoothing_coef = 1.0;    // in [0,1]
  std::size_t steps_per_episode = 8;
  std::size_t episodes = 25;
  RewardWeights weights;
  TrainPhase phase = TrainPhase::Warmup;
  double format_noise = 0.0;   // toy-policy malformed-emission probability
  double lambda = 0.0;         // modification-complexity coefficient
  bool two_sided_clip = false; // standard PPO clipping instead of the
                               // one-sided published form
  std::size_t eval_every = 10; // held-out evaluation cadence (episodes)

  void validate() const;  // throws Error(Usage) on out-of-range fields

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// One sampled action within a rollout group.
struct ActionRecord {
  std::size_t group_index = 0;
  std::size_t answer_index = 0;
  double prob_new = 0.0;
  double prob_old = 0.0;
  RewardBreakdown reward;
  double advantage = 0.0;
  std::string raw;  // the emission this action came from
};

// Episode bookkeeping: the executed transitions plus all per-action rollout
// records (G per step).
struct Trajectory {
  std::vector<Transition> transitions;
  std::size_t group_size = 0;
  std::vector<ActionRecord> records;
};

// Epsilon-greedy action selection: with probability explore_eps a uniform
// canonical answer, otherwise a policy sample. The branch is decided by a
// single rng draw.
SampledAction select_action(const PolicyParams& params, const ActionTable& table,
                            std::size_t group_index, double explore_eps, SplitMix64& rng);

// G single-step evaluations branched from the same state. Each action is
// applied to a copy of the state; results are ordered by sample index.
std::vector<ActionRecord> rollout_group(const KernelEnv& env, const KernelState& state,
                                        const PolicyParams& params, const ToyPolicy& policy,
                                        std::size_t group_index, const TrainConfig& config,
                                        double explore_eps, SplitMix64& rng,
                                        std::vector<Transition>* transitions = nullptr);

// The per-action surrogate term, in the published one-sided form
//   min(prob_new/prob_old, 1 + clip_eps) * advantage
// or, when two_sided is set, the conventional clipped form
//   min(ratio * A, clamp(ratio, 1-clip_eps, 1+clip_eps) * A).
double clipped_objective(double prob_new, double prob_old, double advantage, double clip_eps,
                         bool two_sided = false);

// Mean clipped objective over a batch, as a function of params.theta with
// the snapshot frozen; and its analytic gradient. Terms where the clip
// binds contribute zero gradient.
double batch_objective(const PolicyParams& params, const ActionTable& table,
                       std::span<const ActionRecord> batch, const TrainConfig& config);
std::vector<double> batch_objective_gradient(const PolicyParams& params, const ActionTable& table,
                                             std::span<const ActionRecord> batch,
                                             const TrainConfig& config);

// One ascent step on the mean clipped objective, followed by target policy
// smoothing theta <- theta_old + smoothing_coef * (theta' - theta_old) and a
// snapshot refresh. Returns the pre-update objective value.
double update_policy(PolicyParams& params, const ActionTable& table,
                     std::span<const ActionRecord> batch, const TrainConfig& config);

struct CurvePoint {
  std::size_t step = 0;
  double mean_combined = 0.0;
  double mean_answer = 0.0;
  double mean_format = 0.0;
  double mean_perf = 0.0;
};

struct EvalPoint {
  std::size_t episode = 0;
  double validity_rate = 0.0;
};

struct RunResult {
  PolicyParams params;
  std::vector<CurvePoint> curve;
  std::vector<double> episode_returns;   // sum_t discount^t * r_t per episode
  std::vector<double> executed_rewards;  // combined reward of the executed action, per step
  std::vector<EvalPoint> heldout_evals;
  double final_explore_eps = 0.0;
  std::size_t kb_queries = 0;
  std::size_t kb_hits = 0;
};

// Warm-up phase: environment-free loop over sampled dataset groups scored
// by answer and format rewards only (the performance weight is forced to
// zero regardless of config). table_override substitutes a custom canonical
// answer enumeration (group indices must align with the dataset); reward
// studies use it to widen the action space beyond the valid enumeration.
RunResult run_warmup(const Dataset& dataset, const ConfigSpace& space, PolicyParams params,
                     const TrainConfig& config, std::uint64_t seed,
                     const ActionTable* table_override = nullptr);

// Exploration phase: the full environment loop — reset, epsilon-greedy
// group rollouts, environment steps with the performance reward, knowledge
// base queries, per-group normalization, policy updates, exploration decay,
// and periodic held-out evaluation.
RunResult run_exploration(const Dataset& dataset, const ConfigSpace& space, PolicyParams params,
                          const TrainConfig& config, std::uint64_t seed,
                          const Dataset* heldout = nullptr,
                          const ActionTable* table_override = nullptr);

// Greedy (argmax) decode for one group; ties break to the lowest index.
std::size_t greedy_answer_index(const PolicyParams& params, const ActionTable& table,
                                std::size_t group_index);

// Checkpoint format: text header ("kcfgrl-params 1", dimension) followed by
// one hex-float logit per line. Exact round-trip.
void save_params(const PolicyParams& params, const std::string& path);
PolicyParams load_params(const std::string& path);

std::string curve_to_csv(const std::vector<CurvePoint>& curve);

}  // namespace kcfgrl

#endif
