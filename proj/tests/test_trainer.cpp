#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "kcfgrl/error.hpp"
#include "kcfgrl/trainer.hpp"
#include "test_support.hpp"

using namespace kcfgrl;
using kcfgrl::testing::planted_bool_dataset;
using kcfgrl::testing::planted_bool_space;

namespace {

struct Fixture {
  ConfigSpace space = planted_bool_space(4);
  Dataset dataset = planted_bool_dataset(4);
  ActionTable table = ActionTable::build(space, dataset.groups());
};

TrainConfig quick_config(TrainPhase phase) {
  TrainConfig c;
  c.phase = phase;
  c.episodes = 5;
  c.steps_per_episode = 4;
  return c;
}

}  // namespace

TEST_CASE("select_action branches on a single draw between uniform and policy sampling") {
  Fixture fx;
  PolicyParams params = init_params(fx.table, 21);

  SUBCASE("explore_eps=1 is empirically uniform") {
    // skew the policy hard so uniformity can only come from the explore branch
    params.theta[fx.table.offsets[0]] = 50.0;
    params.refresh_snapshot();
    SplitMix64 rng(55);
    const int n = 100000;
    std::vector<int> counts(fx.table.group_size(0), 0);
    for (int i = 0; i < n; ++i) ++counts[select_action(params, fx.table, 0, 1.0, rng).answer_index];
    const double p = 1.0 / static_cast<double>(counts.size());
    for (int c : counts) {
      const double sigma = std::sqrt(n * p * (1.0 - p));
      CHECK(std::abs(c - n * p) < 3.0 * sigma);
    }
  }
  SUBCASE("explore_eps=0 reduces to sample_action") {
    SplitMix64 r1(7), r2(7);
    r1.next_double();  // burn the branch draw select_action consumes
    const SampledAction via_select = select_action(params, fx.table, 0, 0.0, r2);
    const SampledAction direct = sample_action(params, fx.table, 0, r1);
    CHECK(via_select.answer_index == direct.answer_index);
    CHECK(via_select.prob_new == direct.prob_new);
  }
  SUBCASE("fixed rng stream reproduces choices") {
    SplitMix64 r1(9), r2(9);
    for (int i = 0; i < 50; ++i)
      CHECK(select_action(params, fx.table, 0, 0.3, r1).answer_index ==
            select_action(params, fx.table, 0, 0.3, r2).answer_index);
  }
  SUBCASE("out-of-range explore_eps throws") {
    SplitMix64 rng(1);
    CHECK_THROWS_AS(select_action(params, fx.table, 0, 1.5, rng), Error);
  }
}

TEST_CASE("clipped_objective implements the published one-sided form") {
  CHECK(clipped_objective(1.5, 1.0, 1.0, 0.2) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(clipped_objective(1.0, 1.0, -2.5, 0.2) == -2.5);
  CHECK(clipped_objective(0.5, 1.0, -1.0, 0.2) == -0.5);  // no lower clip in this form
  CHECK_THROWS_AS(clipped_objective(0.5, 0.0, 1.0, 0.2), Error);

  SUBCASE("two-sided compatibility switch") {
    CHECK(clipped_objective(1.5, 1.0, 1.0, 0.2, true) == doctest::Approx(1.2));
    // ratio below the band with negative advantage: the conventional form
    // pessimizes to the clamped value
    CHECK(clipped_objective(0.5, 1.0, -1.0, 0.2, true) == doctest::Approx(-0.8));
    CHECK(clipped_objective(0.5, 1.0, 1.0, 0.2, true) == doctest::Approx(0.5));
  }
}

TEST_CASE("batch objective gradient matches central finite differences") {
  Fixture fx;
  SplitMix64 rng(314);
  const double h = 1e-5;
  int checked = 0;

  for (int iter = 0; iter < 30; ++iter) {
    for (const bool two_sided : {false, true}) {
      PolicyParams params;
      params.theta.resize(fx.table.total_dim());
      for (auto& t : params.theta) t = rng.next_double(-1.0, 1.0);
      params.snapshot = params.theta;
      for (auto& s : *params.snapshot) s += rng.next_double(-0.5, 0.5);

      TrainConfig config = quick_config(TrainPhase::Exploration);
      config.two_sided_clip = two_sided;

      std::vector<ActionRecord> batch;
      bool near_kink = false;
      for (std::size_t i = 0; i < config.group_size; ++i) {
        ActionRecord rec;
        rec.group_index = rng.next_below(fx.table.group_count());
        rec.answer_index = rng.next_below(fx.table.group_size(rec.group_index));
        const auto old_probs = [&] {
          PolicyParams old;
          old.theta = *params.snapshot;
          old.refresh_snapshot();
          return action_probs(old, fx.table, rec.group_index).probs;
        }();
        rec.prob_old = old_probs[rec.answer_index];
        rec.advantage = rng.next_double(-2.0, 2.0);
        const double ratio =
            action_probs(params, fx.table, rec.group_index).probs[rec.answer_index] /
            rec.prob_old;
        if (std::abs(ratio - (1.0 + config.clip_eps)) < 1e-3 ||
            std::abs(ratio - (1.0 - config.clip_eps)) < 1e-3)
          near_kink = true;
        batch.push_back(std::move(rec));
      }
      if (near_kink) continue;  // FD is undefined at the clip kink
      ++checked;

      const auto grad = batch_objective_gradient(params, fx.table, batch, config);
      for (std::size_t j = 0; j < params.theta.size(); ++j) {
        PolicyParams up = params, dn = params;
        up.theta[j] += h;
        dn.theta[j] -= h;
        const double fd = (batch_objective(up, fx.table, batch, config) -
                           batch_objective(dn, fx.table, batch, config)) /
                          (2.0 * h);
        const double denom = std::max({1.0, std::abs(grad[j]), std::abs(fd)});
        CHECK(std::abs(grad[j] - fd) / denom < 1e-5);
      }
    }
  }
  CHECK(checked >= 20);
}

TEST_CASE("update_policy ascends, smooths, and refreshes the snapshot") {
  Fixture fx;
  TrainConfig config = quick_config(TrainPhase::Exploration);

  SUBCASE("all-zero advantages leave params unchanged") {
    PolicyParams params = init_params(fx.table, 2);
    const auto before = params.theta;
    std::vector<ActionRecord> batch(config.group_size);
    for (auto& rec : batch) {
      rec.group_index = 0;
      rec.answer_index = 0;
      rec.prob_old = 0.5;
      rec.advantage = 0.0;
    }
    update_policy(params, fx.table, batch, config);
    CHECK(params.theta == before);
    CHECK(params.snapshot == before);
  }

  SUBCASE("smoothing endpoints") {
    std::vector<ActionRecord> batch(config.group_size);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      batch[i].group_index = 0;
      batch[i].answer_index = i % 2;
      batch[i].prob_old = 0.5;
      batch[i].advantage = (i % 2) ? -1.0 : 1.0;
    }

    PolicyParams pure = init_params(fx.table, 3);
    const auto start = pure.theta;
    config.smoothing_coef = 1.0;
    update_policy(pure, fx.table, batch, config);
    CHECK(pure.theta != start);

    PolicyParams frozen = init_params(fx.table, 3);
    config.smoothing_coef = 0.0;
    update_policy(frozen, fx.table, batch, config);
    CHECK(frozen.theta == start);  // theta_new == theta_old

    PolicyParams half = init_params(fx.table, 3);
    config.smoothing_coef = 0.5;
    update_policy(half, fx.table, batch, config);
    for (std::size_t j = 0; j < start.size(); ++j)
      CHECK(half.theta[j] == doctest::Approx(start[j] + 0.5 * (pure.theta[j] - start[j])));
  }

  SUBCASE("snapshot discipline: ratios are exactly one after refresh") {
    PolicyParams params = init_params(fx.table, 4);
    std::vector<ActionRecord> batch(config.group_size);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      batch[i].group_index = 1;
      batch[i].answer_index = i % 2;
      batch[i].prob_old = 0.5;
      batch[i].advantage = (i % 2) ? 1.0 : -1.0;
    }
    update_policy(params, fx.table, batch, config);
    SplitMix64 rng(5);
    const SampledAction s = sample_action(params, fx.table, 1, rng);
    CHECK(s.prob_new == s.prob_old);
  }

  SUBCASE("dimension mismatch throws") {
    PolicyParams params;
    params.theta = {0.0};
    params.refresh_snapshot();
    CHECK_THROWS_AS(update_policy(params, fx.table, {}, config), Error);
  }
}

TEST_CASE("rollout_group branches G evaluations from one state") {
  Fixture fx;
  const KernelEnv env(fx.space, fx.dataset.groups(), "wl", 3);
  const KernelState s0 = env.reset();
  TrainConfig config = quick_config(TrainPhase::Exploration);
  const ToyPolicy policy(fx.table, 0.0);

  SUBCASE("identical actions yield identical rewards") {
    PolicyParams params = init_params(fx.table, 11);
    params.theta[fx.table.offsets[0]] = 1000.0;  // force one action
    params.refresh_snapshot();
    SplitMix64 rng(17);
    const auto records = rollout_group(env, s0, params, policy, 0, config, 0.0, rng);
    REQUIRE(records.size() == config.group_size);
    for (const auto& rec : records) {
      CHECK(rec.answer_index == records[0].answer_index);
      CHECK(rec.reward.combined == records[0].reward.combined);
    }
  }

  SUBCASE("replay oracle: each record's reward recomputes independently") {
    PolicyParams params = init_params(fx.table, 12);
    SplitMix64 rng(18);
    std::vector<Transition> transitions;
    const auto records =
        rollout_group(env, s0, params, policy, 2, config, 0.25, rng, &transitions);
    REQUIRE(transitions.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const Answer& a = fx.table.answers[2][records[i].answer_index];
      const Transition replay =
          env.step(s0, Action{2, a, true}, config.weights);
      CHECK(replay.reward.combined == records[i].reward.combined);
      CHECK(replay.next_state == transitions[i].next_state);
      // branched from the same state, not from each other
      CHECK(transitions[i].state == s0);
    }
  }

  SUBCASE("G=1 is rejected") {
    PolicyParams params = init_params(fx.table, 13);
    config.group_size = 1;
    SplitMix64 rng(19);
    CHECK_THROWS_AS(rollout_group(env, s0, params, policy, 0, config, 0.0, rng), Error);
  }
}

TEST_CASE("run_warmup trains on answer and format rewards only") {
  const ConfigSpace space = load_config_space(
      "{\"name\":\"C1\",\"kind\":\"Choice\",\"domain\":[\"a\"]}\n"
      "{\"name\":\"C2\",\"kind\":\"Choice\",\"domain\":[\"a\"]}\n"
      "{\"name\":\"C3\",\"kind\":\"Choice\",\"domain\":[\"a\"]}\n");
  Dataset ds;
  ds.entries.push_back(DatasetEntry{
      ConfigGroup{ConfigKind::Choice, {"C1", "C2", "C3"}, "pick", ChoiceAnswer{"C1"}},
      Provenance::Expert});

  TrainConfig config = quick_config(TrainPhase::Warmup);
  config.episodes = 20;
  config.steps_per_episode = 10;  // 200 steps
  config.weights.gamma_perf = 7.0;  // must be ignored by the warmup contract

  const ActionTable table = ActionTable::build(space, ds.groups());
  const RunResult result = run_warmup(ds, space, init_params(table, 1), config, 42);

  CHECK(result.curve.size() == 200);
  double late_answer = 0.0;
  for (std::size_t i = 150; i < 200; ++i) late_answer += result.curve[i].mean_answer;
  CHECK(late_answer / 50.0 >= 0.95);

  for (const auto& p : result.curve) {
    CHECK(p.mean_perf == 0.0);  // gamma_perf forced to zero
    CHECK(p.mean_combined ==
          doctest::Approx(config.weights.alpha * p.mean_answer +
                          config.weights.beta * p.mean_format));
  }

  CHECK_THROWS_AS(run_warmup(Dataset{}, space, PolicyParams{}, config, 1), Error);
}

TEST_CASE("run_exploration follows the schedule and bookkeeping contracts") {
  const ConfigSpace space = planted_bool_space(4);
  const Dataset ds = planted_bool_dataset(4);
  const ActionTable table = ActionTable::build(space, ds.groups());

  TrainConfig config = quick_config(TrainPhase::Exploration);
  config.episodes = 6;
  config.steps_per_episode = 4;

  const RunResult result = run_exploration(ds, space, init_params(table, 5), config, 99);

  SUBCASE("exploration decay schedule") {
    CHECK(result.final_explore_eps ==
          doctest::Approx(config.explore_eps0 * std::pow(config.explore_decay, 6)));
  }
  SUBCASE("curve and returns have the right shape") {
    CHECK(result.curve.size() == 24);
    CHECK(result.executed_rewards.size() == 24);
    CHECK(result.episode_returns.size() == 6);
  }
  SUBCASE("discount endpoint semantics") {
    TrainConfig c1 = config;
    c1.discount = 1.0;
    const RunResult r1 = run_exploration(ds, space, init_params(table, 5), c1, 99);
    for (std::size_t ep = 0; ep < 6; ++ep) {
      double plain = 0.0;
      for (std::size_t t = 0; t < 4; ++t) plain += r1.executed_rewards[ep * 4 + t];
      CHECK(r1.episode_returns[ep] == doctest::Approx(plain).epsilon(1e-12));
    }

    TrainConfig c0 = config;
    c0.discount = 0.0;
    const RunResult r0 = run_exploration(ds, space, init_params(table, 5), c0, 99);
    for (double ret : r0.episode_returns) CHECK(ret == 0.0);  // sum_t 0^t r_t, t >= 1

    // the discount only affects bookkeeping, not the trained policy
    CHECK(r1.params.theta == r0.params.theta);
  }
  SUBCASE("knowledge base is consulted per executed step") {
    CHECK(result.kb_queries == 24);
    CHECK(result.kb_hits == 24);  // toy tool calls query real symbols
  }
  SUBCASE("determinism: identical inputs give bitwise-identical outcomes") {
    const RunResult again = run_exploration(ds, space, init_params(table, 5), config, 99);
    CHECK(again.params.theta == result.params.theta);
    REQUIRE(again.curve.size() == result.curve.size());
    for (std::size_t i = 0; i < result.curve.size(); ++i) {
      CHECK(again.curve[i].mean_combined == result.curve[i].mean_combined);
      CHECK(again.curve[i].mean_perf == result.curve[i].mean_perf);
    }
    const RunResult other = run_exploration(ds, space, init_params(table, 5), config, 100);
    CHECK(other.params.theta != result.params.theta);
  }
  SUBCASE("dimension mismatch throws") {
    PolicyParams bad;
    bad.theta = {0.0, 0.0};
    bad.refresh_snapshot();
    CHECK_THROWS_AS(run_exploration(ds, space, bad, config, 1), Error);
  }
}

TEST_CASE("run_exploration evaluates held-out groups on the configured cadence") {
  const ConfigSpace space = planted_bool_space(6);
  Dataset train = planted_bool_dataset(6);
  Dataset heldout;
  heldout.entries.assign(train.entries.begin() + 4, train.entries.end());
  train.entries.resize(4);

  std::vector<ConfigGroup> combined = train.groups();
  for (const auto& e : heldout.entries) combined.push_back(e.group);
  const ActionTable table = ActionTable::build(space, combined);

  TrainConfig config = quick_config(TrainPhase::Exploration);
  config.episodes = 20;
  config.eval_every = 10;

  const RunResult result =
      run_exploration(train, space, init_params(table, 8), config, 123, &heldout);
  REQUIRE(result.heldout_evals.size() == 2);
  CHECK(result.heldout_evals[0].episode == 10);
  CHECK(result.heldout_evals[1].episode == 20);
  // canonical enumerations only contain valid answers
  CHECK(result.heldout_evals[0].validity_rate == 1.0);
}

TEST_CASE("provenance labels never affect training") {
  const ConfigSpace space = planted_bool_space(4);
  Dataset a = planted_bool_dataset(4);
  Dataset b = a;
  for (auto& e : b.entries) e.provenance = Provenance::Official;

  const ActionTable table = ActionTable::build(space, a.groups());
  TrainConfig config = quick_config(TrainPhase::Exploration);
  const RunResult ra = run_exploration(a, space, init_params(table, 6), config, 31);
  const RunResult rb = run_exploration(b, space, init_params(table, 6), config, 31);
  CHECK(ra.params.theta == rb.params.theta);
}

TEST_CASE("checkpoints round-trip exactly") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "kcfgrl_ckpt_test";
  fs::create_directories(dir);
  const std::string path = (dir / "p.ckpt").string();

  PolicyParams params;
  params.theta = {0.0, -1.5, 3.25e-17, 1e300, -0.1, 7.0 / 3.0};
  params.refresh_snapshot();
  save_params(params, path);
  const PolicyParams back = load_params(path);
  CHECK(back.theta == params.theta);
  CHECK(back.snapshot == params.theta);

  SUBCASE("corrupt files are rejected") {
    std::ofstream(path) << "not a checkpoint\n";
    CHECK_THROWS_AS(load_params(path), Error);
    std::ofstream(path) << "kcfgrl-params 1\n3\n0x1p+0\n";
    CHECK_THROWS_AS(load_params(path), Error);
    CHECK_THROWS_AS(load_params((dir / "missing.ckpt").string()), Error);
  }
  fs::remove_all(dir);
}

TEST_CASE("curve_to_csv emits one row per step") {
  std::vector<CurvePoint> curve{{0, 1.5, 1.0, 1.0, 0.25}, {1, 2.0, 1.0, 1.0, 0.5}};
  const std::string csv = curve_to_csv(curve);
  CHECK(csv.find("step,reward_mean,answer_mean,format_mean,perf_mean\n") == 0);
  CHECK(csv.find("\n0,1.5,1,1,0.25\n") != std::string::npos);
  CHECK(csv.find("\n1,2,1,1,0.5\n") != std::string::npos);
}

TEST_CASE("train config validation rejects out-of-range fields") {
  TrainConfig c;
  c.validate();
  TrainConfig bad = c;
  bad.group_size = 1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.clip_eps = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.discount = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.explore_decay = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.smoothing_coef = -0.1;
  CHECK_THROWS_AS(bad.validate(), Error);

  SUBCASE("json round-trip preserves every field") {
    TrainConfig custom;
    custom.group_size = 4;
    custom.clip_eps = 0.3;
    custom.discount = 0.5;
    custom.explore_eps0 = 0.7;
    custom.explore_decay = 0.9;
    custom.learning_rate = 0.05;
    custom.smoothing_coef = 0.25;
    custom.steps_per_episode = 3;
    custom.episodes = 11;
    custom.weights = RewardWeights{2.0, 0.5, 1.5};
    custom.phase = TrainPhase::Exploration;
    custom.format_noise = 0.3;
    custom.lambda = 1.0;
    custom.two_sided_clip = true;
    const TrainConfig back = TrainConfig::from_json(custom.to_json());
    CHECK(back.group_size == custom.group_size);
    CHECK(back.clip_eps == custom.clip_eps);
    CHECK(back.discount == custom.discount);
    CHECK(back.explore_eps0 == custom.explore_eps0);
    CHECK(back.explore_decay == custom.explore_decay);
    CHECK(back.learning_rate == custom.learning_rate);
    CHECK(back.smoothing_coef == custom.smoothing_coef);
    CHECK(back.steps_per_episode == custom.steps_per_episode);
    CHECK(back.episodes == custom.episodes);
    CHECK(back.weights == custom.weights);
    CHECK(back.phase == custom.phase);
    CHECK(back.format_noise == custom.format_noise);
    CHECK(back.lambda == custom.lambda);
    CHECK(back.two_sided_clip == custom.two_sided_clip);
  }
}
