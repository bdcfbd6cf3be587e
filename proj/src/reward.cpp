#include "kcfgrl/reward.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kcfgrl/error.hpp"

namespace kcfgrl {

double answer_reward(const ConfigGroup& group, const std::optional<Answer>& given,
                     const ConfigSpace& space) {
  if (!given) return 0.0;
  if (answer_kind(*given) != group.type) return 0.0;

  const std::set<std::string> cset(group.candidates.begin(), group.candidates.end());

  switch (group.type) {
    case ConfigKind::Bool: {
      const auto& b = std::get<BoolAnswer>(*given);
      return cset.count(b.symbol) ? 1.0 : 0.0;
    }
    case ConfigKind::Choice: {
      const auto& c = std::get<ChoiceAnswer>(*given);
      return cset.count(c.symbol) ? 1.0 : 0.0;
    }
    case ConfigKind::Menu: {
      const auto& m = std::get<MenuAnswer>(*given);
      if (m.symbols.empty()) return 0.0;
      for (const auto& s : m.symbols)
        if (!cset.count(s)) return 0.0;
      return 1.0;
    }
    case ConfigKind::Value: {
      const auto& v = std::get<ValueAnswer>(*given);
      if (!cset.count(v.symbol) || !space.has(v.symbol)) return 0.0;
      return space.at(v.symbol).in_domain(v.value) ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

double perf_reward(const PerfObservation& obs) {
  double total = 0.0;
  for (const auto& e : obs.entries) {
    if (!(e.p_base > 0.0)) throw_data("perf_reward: p_base must be > 0");
    if (!(e.p_new > 0.0)) throw_data("perf_reward: p_new must be > 0");
    if (!(e.c_max > 0.0)) throw_data("perf_reward: c_max must be > 0");
    if (e.lambda < 0.0) throw_data("perf_reward: lambda must be >= 0");
    if (e.c_config < 0.0 || e.c_config > e.c_max)
      throw_data("perf_reward: c_config must lie in [0, c_max]");
    total += ((e.p_new - e.p_base) / e.p_base) * (1.0 + e.lambda * e.c_config / e.c_max);
  }
  return total;
}

RewardBreakdown combined_reward(double r_answer, double r_format, double r_perf,
                                const RewardWeights& weights) {
  if (weights.alpha < 0.0 || weights.beta < 0.0 || weights.gamma_perf < 0.0)
    throw_data("combined_reward: weights must be nonnegative");
  RewardBreakdown out;
  out.r_answer = r_answer;
  out.r_format = r_format;
  out.r_perf = r_perf;
  out.weights = weights;
  // The identity the breakdown promises; kept as a single expression so the
  // arithmetic is reproducible term for term.
  out.combined = weights.alpha * r_answer + weights.beta * r_format + weights.gamma_perf * r_perf;
  return out;
}

double warmup_reward(const std::vector<WarmupTerm>& terms) {
  double total = 0.0;
  for (const auto& t : terms) total += t.alpha * t.r_answer + t.beta * t.r_format;
  return total;
}

GroupNormalization normalize_group(const std::vector<double>& rewards) {
  if (rewards.empty()) throw_usage("normalize_group: empty reward group");
  const double g = static_cast<double>(rewards.size());

  GroupNormalization out;
  for (double r : rewards) out.mu += r;
  out.mu /= g;

  double ss = 0.0;
  for (double r : rewards) ss += (r - out.mu) * (r - out.mu);
  out.sigma = std::sqrt(ss / g);

  out.advantages.resize(rewards.size(), 0.0);
  if (out.sigma > 0.0) {
    for (std::size_t i = 0; i < rewards.size(); ++i)
      out.advantages[i] = (rewards[i] - out.mu) / out.sigma;
  }
  return out;
}

}  // namespace kcfgrl
