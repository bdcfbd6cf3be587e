#ifndef KCFGRL_REWARD_HPP
#define KCFGRL_REWARD_HPP

#include <optional>
#include <vector>

#include "kcfgrl/config_space.hpp"

namespace kcfgrl {

struct RewardWeights {
  double alpha = 1.0;       // answer term
  double beta = 1.0;        // format term
  double gamma_perf = 1.0;  // performance term
  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

struct RewardBreakdown {
  double r_format = 0.0;  // {0,1}
  double r_answer = 0.0;  // {0,1}
  double r_perf = 0.0;
  RewardWeights weights;
  double combined = 0.0;  // alpha*r_answer + beta*r_format + gamma_perf*r_perf
};

// Per-modification performance observation. Each entry carries the baseline
// and new scores plus the complexity weighting of the modification.
struct PerfEntry {
  double p_base = 0.0;    // > 0
  double p_new = 0.0;     // > 0
  double lambda = 0.0;    // >= 0
  double c_config = 0.0;  // >= 0, <= c_max
  double c_max = 1.0;     // > 0
};

struct PerfObservation {
  std::vector<PerfEntry> entries;
};

// 1 iff the proposed answer is a valid modification for the group:
//   Bool   a Yes/No assignment to a candidate
//   Menu   at least one selection, none outside the candidate set
//   Choice exactly one selection from the candidate set
//   Value  a literal within the candidate symbol's domain
// nullopt (parse failure) scores 0.
double answer_reward(const ConfigGroup& group, const std::optional<Answer>& given,
                     const ConfigSpace& space);

// Sum over modifications of relative improvement scaled by complexity:
//   sum_i ((p_new_i - p_base_i) / p_base_i) * (1 + lambda_i * c_config_i / c_max_i)
double perf_reward(const PerfObservation& obs);

RewardBreakdown combined_reward(double r_answer, double r_format, double r_perf,
                                const RewardWeights& weights);

struct WarmupTerm {
  double r_answer = 0.0;
  double r_format = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
};

// sum_i (alpha_i * r_answer_i + beta_i * r_format_i)
double warmup_reward(const std::vector<WarmupTerm>& terms);

struct GroupNormalization {
  double mu = 0.0;
  double sigma = 0.0;  // population form, divisor G
  std::vector<double> advantages;
};

// Group-relative normalization: A_i = (r_i - mu) / sigma, all zeros when
// sigma == 0. Throws on an empty group.
GroupNormalization normalize_group(const std::vector<double>& rewards);

}  // namespace kcfgrl

#endif
