#include "kcfgrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "kcfgrl/error.hpp"
#include "kcfgrl/response.hpp"

namespace kcfgrl {

using nlohmann::json;

void TrainConfig::validate() const {
  if (group_size < 2) throw_usage("group_size must be >= 2");
  if (!(clip_eps > 0.0)) throw_usage("clip_eps must be > 0");
  if (discount < 0.0 || discount > 1.0) throw_usage("discount must lie in [0,1]");
  if (explore_eps0 < 0.0 || explore_eps0 > 1.0) throw_usage("explore_eps must lie in [0,1]");
  if (!(explore_decay > 0.0 && explore_decay <= 1.0))
    throw_usage("explore_decay must lie in (0,1]");
  if (!(learning_rate > 0.0)) throw_usage("learning rate must be > 0");
  if (smoothing_coef < 0.0 || smoothing_coef > 1.0) throw_usage("smoothing must lie in [0,1]");
  if (steps_per_episode < 1) throw_usage("steps_per_episode must be >= 1");
  if (episodes < 1) throw_usage("episodes must be >= 1");
  if (weights.alpha < 0.0 || weights.beta < 0.0 || weights.gamma_perf < 0.0)
    throw_usage("reward weights must be nonnegative");
  if (format_noise < 0.0 || format_noise > 1.0) throw_usage("format_noise must lie in [0,1]");
  if (lambda < 0.0) throw_usage("lambda must be >= 0");
  if (eval_every < 1) throw_usage("eval_every must be >= 1");
}

json TrainConfig::to_json() const {
  return json{{"group_size", group_size},
              {"clip_eps", clip_eps},
              {"discount", discount},
              {"explore_eps", explore_eps0},
              {"explore_decay", explore_decay},
              {"learning_rate", learning_rate},
              {"smoothing_coef", smoothing_coef},
              {"steps_per_episode", steps_per_episode},
              {"episodes", episodes},
              {"weights", {{"alpha", weights.alpha},
                           {"beta", weights.beta},
                           {"gamma_perf", weights.gamma_perf}}},
              {"phase", phase == TrainPhase::Warmup ? "warmup" : "explore"},
              {"format_noise", format_noise},
              {"lambda", lambda},
              {"two_sided_clip", two_sided_clip},
              {"eval_every", eval_every}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.group_size = j.value("group_size", c.group_size);
  c.clip_eps = j.value("clip_eps", c.clip_eps);
  c.discount = j.value("discount", c.discount);
  c.explore_eps0 = j.value("explore_eps", c.explore_eps0);
  c.explore_decay = j.value("explore_decay", c.explore_decay);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.smoothing_coef = j.value("smoothing_coef", c.smoothing_coef);
  c.steps_per_episode = j.value("steps_per_episode", c.steps_per_episode);
  c.episodes = j.value("episodes", c.episodes);
  if (j.contains("weights")) {
    const json& w = j["weights"];
    c.weights.alpha = w.value("alpha", c.weights.alpha);
    c.weights.beta = w.value("beta", c.weights.beta);
    c.weights.gamma_perf = w.value("gamma_perf", c.weights.gamma_perf);
  }
  if (j.contains("phase")) {
    const std::string p = j["phase"].get<std::string>();
    if (p == "warmup") c.phase = TrainPhase::Warmup;
    else if (p == "explore") c.phase = TrainPhase::Exploration;
    else throw_usage("unknown phase \"" + p + "\"");
  }
  c.format_noise = j.value("format_noise", c.format_noise);
  c.lambda = j.value("lambda", c.lambda);
  c.two_sided_clip = j.value("two_sided_clip", c.two_sided_clip);
  c.eval_every = j.value("eval_every", c.eval_every);
  return c;
}

// ---------------------------------------------------------------------------

SampledAction select_action(const PolicyParams& params, const ActionTable& table,
                            std::size_t group_index, double explore_eps, SplitMix64& rng) {
  if (explore_eps < 0.0 || explore_eps > 1.0) throw_usage("explore_eps must lie in [0,1]");
  const double branch = rng.next_double();
  if (branch < explore_eps) {
    const std::size_t k = rng.next_below(table.group_size(group_index));
    ActionDistribution dist = action_probs(params, table, group_index);
    if (!params.snapshot) throw_usage("select_action: snapshot (old policy) not set");
    std::size_t off = table.offsets[group_index];
    // old-policy probability for the same answer
    std::vector<double> old_logits(params.snapshot->begin() + off,
                                   params.snapshot->begin() + off + dist.probs.size());
    double hi = *std::max_element(old_logits.begin(), old_logits.end());
    double z = 0.0;
    for (double l : old_logits) z += std::exp(l - hi);
    const double old_p = std::exp(old_logits[k] - hi) / z;
    return SampledAction{k, dist.probs[k], old_p};
  }
  return sample_action(params, table, group_index, rng);
}

std::vector<ActionRecord> rollout_group(const KernelEnv& env, const KernelState& state,
                                        const PolicyParams& params, const ToyPolicy& policy,
                                        std::size_t group_index, const TrainConfig& config,
                                        double explore_eps, SplitMix64& rng,
                                        std::vector<Transition>* transitions) {
  if (config.group_size < 2) throw_usage("rollout_group: group size must be >= 2");
  const ConfigGroup& group = env.groups().at(group_index);

  std::vector<ActionRecord> records;
  records.reserve(config.group_size);
  for (std::size_t i = 0; i < config.group_size; ++i) {
    SampledAction s = select_action(params, policy.table(), group_index, explore_eps, rng);
    const std::string raw = policy.render_emission(group_index, s.answer_index, rng);

    ParseResult parsed = parse_response(raw);
    const double r_format = format_reward(parsed);
    std::optional<Answer> answer;
    if (const auto* resp = std::get_if<AgentResponse>(&parsed))
      answer = parse_answer(resp->answer, group.type);

    Action action{group_index, answer, r_format == 1.0};
    Transition tr = env.step(state, action, config.weights);

    ActionRecord rec;
    rec.group_index = group_index;
    rec.answer_index = s.answer_index;
    rec.prob_new = s.prob_new;
    rec.prob_old = s.prob_old;
    rec.reward = tr.reward;
    rec.raw = raw;
    records.push_back(std::move(rec));
    if (transitions) transitions->push_back(std::move(tr));
  }
  return records;
}

double clipped_objective(double prob_new, double prob_old, double advantage, double clip_eps,
                         bool two_sided) {
  if (!(prob_old > 0.0)) throw_usage("clipped_objective: prob_old must be > 0");
  const double ratio = prob_new / prob_old;
  if (!two_sided) return std::min(ratio, 1.0 + clip_eps) * advantage;
  const double clamped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clamped * advantage);
}

double batch_objective(const PolicyParams& params, const ActionTable& table,
                       std::span<const ActionRecord> batch, const TrainConfig& config) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const ActionRecord& rec : batch) {
    ActionDistribution dist = action_probs(params, table, rec.group_index);
    total += clipped_objective(dist.probs[rec.answer_index], rec.prob_old, rec.advantage,
                               config.clip_eps, config.two_sided_clip);
  }
  return total / static_cast<double>(batch.size());
}

std::vector<double> batch_objective_gradient(const PolicyParams& params, const ActionTable& table,
                                             std::span<const ActionRecord> batch,
                                             const TrainConfig& config) {
  std::vector<double> grad(params.theta.size(), 0.0);
  if (batch.empty()) return grad;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (const ActionRecord& rec : batch) {
    ActionDistribution dist = action_probs(params, table, rec.group_index);
    if (!(rec.prob_old > 0.0)) throw_usage("batch gradient: prob_old must be > 0");
    const double ratio = dist.probs[rec.answer_index] / rec.prob_old;

    bool active;
    if (!config.two_sided_clip) {
      // min(ratio, 1+eps)*A: once the clip binds the term is constant.
      active = ratio < 1.0 + config.clip_eps;
    } else {
      const double clamped = std::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps);
      active = ratio * rec.advantage <= clamped * rec.advantage;
    }
    if (!active) continue;

    // d/dtheta of ratio*A = A * ratio * (one_hot - probs) on the group slice.
    const double scale = rec.advantage * ratio * inv_n;
    const std::size_t off = table.offsets[rec.group_index];
    for (std::size_t j = 0; j < dist.probs.size(); ++j) {
      const double onehot = (j == rec.answer_index) ? 1.0 : 0.0;
      grad[off + j] += scale * (onehot - dist.probs[j]);
    }
  }
  return grad;
}

double update_policy(PolicyParams& params, const ActionTable& table,
                     std::span<const ActionRecord> batch, const TrainConfig& config) {
  if (params.theta.size() != table.total_dim())
    throw_usage("update_policy: params dimension mismatch");
  if (!params.snapshot || params.snapshot->size() != params.theta.size())
    throw_usage("update_policy: snapshot not set");

  const double objective = batch_objective(params, table, batch, config);
  const std::vector<double> grad = batch_objective_gradient(params, table, batch, config);
  const std::vector<double> theta_old = *params.snapshot;

  for (std::size_t j = 0; j < params.theta.size(); ++j)
    params.theta[j] += config.learning_rate * grad[j];
  for (std::size_t j = 0; j < params.theta.size(); ++j)
    params.theta[j] = theta_old[j] + config.smoothing_coef * (params.theta[j] - theta_old[j]);
  params.refresh_snapshot();
  return objective;
}

// ---------------------------------------------------------------------------

namespace {

CurvePoint mean_point(std::size_t step, std::span<const ActionRecord> records) {
  CurvePoint p;
  p.step = step;
  for (const auto& r : records) {
    p.mean_combined += r.reward.combined;
    p.mean_answer += r.reward.r_answer;
    p.mean_format += r.reward.r_format;
    p.mean_perf += r.reward.r_perf;
  }
  const double n = static_cast<double>(records.size());
  p.mean_combined /= n;
  p.mean_answer /= n;
  p.mean_format /= n;
  p.mean_perf /= n;
  return p;
}

}  // namespace

RunResult run_warmup(const Dataset& dataset, const ConfigSpace& space, PolicyParams params,
                     const TrainConfig& config, std::uint64_t seed,
                     const ActionTable* table_override) {
  config.validate();
  if (dataset.empty()) throw_usage("run_warmup: empty dataset");

  const std::vector<ConfigGroup> groups = dataset.groups();
  const ActionTable table = table_override ? *table_override : ActionTable::build(space, groups);
  if (table.group_count() != groups.size())
    throw_usage("run_warmup: action table does not cover the dataset groups");
  if (params.theta.size() != table.total_dim())
    throw_usage("run_warmup: params dimension mismatch");

  // Warm-up scores answer and format only; the performance weight is forced
  // to zero no matter what the caller configured.
  TrainConfig warm = config;
  warm.weights.gamma_perf = 0.0;

  const ToyPolicy policy(table, warm.format_noise);
  SplitMix64 rng = SplitMix64(seed).fork("warmup");

  RunResult result;
  const std::size_t total_steps = warm.episodes * warm.steps_per_episode;
  for (std::size_t step = 0; step < total_steps; ++step) {
    const std::size_t g = rng.next_below(groups.size());
    const ConfigGroup& group = groups[g];

    std::vector<ActionRecord> records;
    records.reserve(warm.group_size);
    for (std::size_t i = 0; i < warm.group_size; ++i) {
      SampledAction s = sample_action(params, table, g, rng);
      const std::string raw = policy.render_emission(g, s.answer_index, rng);
      ParseResult parsed = parse_response(raw);
      const double r_format = format_reward(parsed);
      std::optional<Answer> answer;
      if (const auto* resp = std::get_if<AgentResponse>(&parsed))
        answer = parse_answer(resp->answer, group.type);
      const double r_answer = answer_reward(group, answer, space);

      ActionRecord rec;
      rec.group_index = g;
      rec.answer_index = s.answer_index;
      rec.prob_new = s.prob_new;
      rec.prob_old = s.prob_old;
      rec.reward = combined_reward(r_answer, r_format, 0.0, warm.weights);
      rec.raw = raw;
      records.push_back(std::move(rec));
    }

    GroupNormalization norm = normalize_group([&] {
      std::vector<double> rs;
      rs.reserve(records.size());
      for (const auto& r : records) rs.push_back(r.reward.combined);
      return rs;
    }());
    for (std::size_t i = 0; i < records.size(); ++i) records[i].advantage = norm.advantages[i];

    update_policy(params, table, records, warm);
    result.curve.push_back(mean_point(step, records));
  }

  result.params = std::move(params);
  result.final_explore_eps = warm.explore_eps0;
  return result;
}

RunResult run_exploration(const Dataset& dataset, const ConfigSpace& space, PolicyParams params,
                          const TrainConfig& config, std::uint64_t seed,
                          const Dataset* heldout, const ActionTable* table_override) {
  config.validate();
  if (dataset.empty()) throw_usage("run_exploration: empty dataset");

  std::vector<ConfigGroup> groups = dataset.groups();
  const std::size_t n_train = groups.size();
  if (heldout)
    for (const auto& e : heldout->entries) groups.push_back(e.group);

  const ActionTable table = table_override ? *table_override : ActionTable::build(space, groups);
  if (table.group_count() != groups.size())
    throw_usage("run_exploration: action table does not cover the groups");
  if (params.theta.size() != table.total_dim())
    throw_usage("run_exploration: params dimension mismatch (expected " +
                std::to_string(table.total_dim()) + ", got " +
                std::to_string(params.theta.size()) + ")");

  const KnowledgeBase kb = KnowledgeBase::from_space(space);
  const ToyPolicy policy(table, config.format_noise);
  const KernelEnv env(space, groups, "default", seed, config.lambda);
  SplitMix64 rng = SplitMix64(seed).fork("explore");

  RunResult result;
  double explore_eps = config.explore_eps0;
  std::size_t global_step = 0;

  for (std::size_t ep = 0; ep < config.episodes; ++ep) {
    KernelState state = env.reset();
    double episode_return = 0.0;

    for (std::size_t t = 0; t < config.steps_per_episode; ++t) {
      const std::size_t g = t % n_train;

      std::vector<Transition> transitions;
      std::vector<ActionRecord> records =
          rollout_group(env, state, params, policy, g, config, explore_eps, rng, &transitions);

      GroupNormalization norm = normalize_group([&] {
        std::vector<double> rs;
        rs.reserve(records.size());
        for (const auto& r : records) rs.push_back(r.reward.combined);
        return rs;
      }());
      for (std::size_t i = 0; i < records.size(); ++i) records[i].advantage = norm.advantages[i];

      update_policy(params, table, records, config);

      // The episode advances along the first sample; the remaining G-1 are
      // counterfactual branches used only for the update.
      const Transition& executed = transitions.front();
      episode_return +=
          std::pow(config.discount, static_cast<double>(t + 1)) * executed.reward.combined;

      // Knowledge-base consultation for the executed action's tool calls.
      const ParseResult executed_parse = parse_response(records.front().raw);
      if (const auto* resp = std::get_if<AgentResponse>(&executed_parse)) {
        for (const auto& q : resp->tool_calls) {
          ++result.kb_queries;
          if (kb_query(kb, q)) ++result.kb_hits;
        }
      }

      result.curve.push_back(mean_point(global_step, records));
      result.executed_rewards.push_back(executed.reward.combined);
      state = executed.next_state;
      ++global_step;
    }

    result.episode_returns.push_back(episode_return);
    explore_eps *= config.explore_decay;

    if (heldout && !heldout->empty() && (ep + 1) % config.eval_every == 0) {
      double valid = 0.0;
      for (std::size_t h = 0; h < heldout->size(); ++h) {
        const std::size_t gi = n_train + h;
        const std::size_t k = greedy_answer_index(params, table, gi);
        valid += answer_reward(groups[gi], table.answers[gi][k], space);
      }
      result.heldout_evals.push_back(
          EvalPoint{ep + 1, valid / static_cast<double>(heldout->size())});
    }
  }

  result.params = std::move(params);
  result.final_explore_eps = explore_eps;
  return result;
}

std::size_t greedy_answer_index(const PolicyParams& params, const ActionTable& table,
                                std::size_t group_index) {
  const std::size_t off = table.offsets[group_index];
  const std::size_t n = table.group_size(group_index);
  std::size_t best = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (params.theta[off + k] > params.theta[off + best]) best = k;
  return best;
}

// ---------------------------------------------------------------------------

void save_params(const PolicyParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write checkpoint '" + path + "'");
  out << "kcfgrl-params 1\n" << params.theta.size() << "\n";
  char buf[64];
  for (double t : params.theta) {
    std::snprintf(buf, sizeof buf, "%a\n", t);
    out << buf;
  }
}

PolicyParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open checkpoint '" + path + "'");
  std::string header;
  if (!std::getline(in, header) || header != "kcfgrl-params 1")
    throw_data("checkpoint '" + path + "': bad header");
  std::size_t dim = 0;
  if (!(in >> dim)) throw_data("checkpoint '" + path + "': missing dimension");

  PolicyParams params;
  params.theta.reserve(dim);
  std::string tok;
  while (params.theta.size() < dim && in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw_data("checkpoint '" + path + "': bad value \"" + tok + "\"");
    params.theta.push_back(v);
  }
  if (params.theta.size() != dim)
    throw_data("checkpoint '" + path + "': expected " + std::to_string(dim) + " values");
  params.refresh_snapshot();
  return params;
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "step,reward_mean,answer_mean,format_mean,perf_mean\n";
  char buf[256];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", p.step, p.mean_combined,
                  p.mean_answer, p.mean_format, p.mean_perf);
    out += buf;
  }
  return out;
}

}  // namespace kcfgrl
