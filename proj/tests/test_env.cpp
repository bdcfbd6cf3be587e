#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "kcfgrl/env.hpp"
#include "kcfgrl/error.hpp"
#include "test_support.hpp"

using namespace kcfgrl;

namespace {

ConfigSpace env_space() {
  return load_config_space(
      "{\"name\":\"CFG_A\",\"kind\":\"Bool\"}\n"
      "{\"name\":\"CFG_B\",\"kind\":\"Bool\",\"depends_on\":[{\"symbol\":\"CFG_A\",\"value\":\"Yes\"}]}\n"
      "{\"name\":\"GOV\",\"kind\":\"Choice\",\"domain\":[\"performance\",\"powersave\"]}\n"
      "{\"name\":\"HZ\",\"kind\":\"Value\",\"domain\":{\"min\":8,\"max\":64}}\n");
}

std::vector<ConfigGroup> env_groups() {
  return {
      ConfigGroup{ConfigKind::Bool, {"CFG_A"}, "a", BoolAnswer{"CFG_A", true}},
      ConfigGroup{ConfigKind::Bool, {"CFG_B"}, "b", BoolAnswer{"CFG_B", true}},
      ConfigGroup{ConfigKind::Choice, {"GOV"}, "gov", ChoiceAnswer{"GOV"}},
      ConfigGroup{ConfigKind::Value, {"HZ"}, "hz", ValueAnswer{"HZ", Literal(32)}},
  };
}

}  // namespace

TEST_CASE("reset produces the deterministic conservative default state") {
  const ConfigSpace space = env_space();
  const KernelEnv env(space, env_groups(), "wl", 7);
  const KernelState s0 = env.reset();

  CHECK(s0.assignment.values.at("CFG_A") == kNo);
  CHECK(s0.assignment.values.at("GOV") == Literal("performance"));
  CHECK(s0.assignment.values.at("HZ") == Literal(8));
  // CFG_B requires CFG_A=Yes, unsatisfiable by defaults: left unassigned
  CHECK(s0.assignment.values.count("CFG_B") == 0);
  CHECK(check_dependencies(space, s0.assignment).empty());
  CHECK(s0.metrics.at(kScoreMetric) > 0.0);

  const KernelState again = env.reset();
  CHECK(again == s0);
}

TEST_CASE("step applies a valid modification and prices it with the benchmark oracle") {
  const ConfigSpace space = env_space();
  const KernelEnv env(space, env_groups(), "wl", 7);
  const KernelState s0 = env.reset();

  const Action flip{0, Answer(BoolAnswer{"CFG_A", true}), true};
  const Transition tr = env.step(s0, flip, RewardWeights{1, 1, 1});

  CHECK(tr.next_state.assignment.values.at("CFG_A") == kYes);
  CHECK(tr.reward.r_answer == 1.0);
  CHECK(tr.reward.r_format == 1.0);

  // independent evaluation of the benchmark on both assignments
  Assignment modified = s0.assignment;
  modified.values["CFG_A"] = kYes;
  const double p_base = synthetic_benchmark(space, s0.assignment, "wl", 7).at(kScoreMetric);
  const double p_new = synthetic_benchmark(space, modified, "wl", 7).at(kScoreMetric);
  CHECK(tr.reward.r_perf == (p_new - p_base) / p_base);
  CHECK(tr.reward.combined == 1.0 + 1.0 + tr.reward.r_perf);

  SUBCASE("only symbols named by the action change") {
    for (const auto& [name, value] : s0.assignment.values)
      if (name != "CFG_A") CHECK(tr.next_state.assignment.values.at(name) == value);
  }
}

TEST_CASE("invalid actions never mutate the state") {
  const ConfigSpace space = env_space();
  const KernelEnv env(space, env_groups(), "wl", 7);
  const KernelState s0 = env.reset();

  SUBCASE("shape-invalid answer (menu shape for a choice group)") {
    const Action bad{2, Answer(MenuAnswer{{"GOV", "HZ"}}), true};
    const Transition tr = env.step(s0, bad, RewardWeights{1, 1, 1});
    CHECK(tr.next_state == s0);
    CHECK(tr.reward.r_answer == 0.0);
    CHECK(tr.reward.r_perf == 0.0);
    CHECK(tr.reward.combined == 1.0);  // format bit only
  }
  SUBCASE("dependency-violating action") {
    const Action bad{1, Answer(BoolAnswer{"CFG_B", true}), true};  // needs CFG_A=Yes
    const Transition tr = env.step(s0, bad, RewardWeights{1, 1, 1});
    CHECK(tr.next_state == s0);
    CHECK(tr.reward.r_answer == 0.0);
    CHECK(tr.reward.r_perf == 0.0);
  }
  SUBCASE("parse-failure action") {
    const Action bad{0, std::nullopt, false};
    const Transition tr = env.step(s0, bad, RewardWeights{1, 1, 1});
    CHECK(tr.next_state == s0);
    CHECK(tr.reward.combined == 0.0);
  }
  SUBCASE("randomized invalid-action fuzzing") {
    SplitMix64 rng(404);
    for (int i = 0; i < 200; ++i) {
      Action bad;
      bad.group_index = rng.next_below(4);
      switch (rng.next_below(3)) {
        case 0: bad.answer = std::nullopt; break;
        case 1: bad.answer = ChoiceAnswer{"NOT_A_SYMBOL"}; break;
        default: bad.answer = ValueAnswer{"HZ", Literal(9999)}; break;
      }
      bad.format_ok = rng.next_below(2) == 0;
      const Transition tr = env.step(s0, bad, RewardWeights{1, 1, 1});
      CHECK(tr.next_state == s0);
      CHECK(tr.reward.r_answer == 0.0);
      CHECK(tr.reward.r_perf == 0.0);
    }
  }
  SUBCASE("out-of-range group index throws") {
    CHECK_THROWS_AS(env.step(s0, Action{99, std::nullopt, true}, RewardWeights{}), Error);
  }
}

TEST_CASE("dependent modifications become valid once the parent is enabled") {
  const ConfigSpace space = env_space();
  const KernelEnv env(space, env_groups(), "wl", 7);
  const KernelState s0 = env.reset();
  const Transition t1 = env.step(s0, Action{0, Answer(BoolAnswer{"CFG_A", true}), true},
                                 RewardWeights{1, 1, 1});
  const Transition t2 = env.step(t1.next_state, Action{1, Answer(BoolAnswer{"CFG_B", true}), true},
                                 RewardWeights{1, 1, 1});
  CHECK(t2.reward.r_answer == 1.0);
  CHECK(t2.next_state.assignment.values.at("CFG_B") == kYes);
}

TEST_CASE("synthetic_benchmark is deterministic, positive, and seed-sensitive") {
  const ConfigSpace space = env_space();
  const KernelEnv env(space, env_groups(), "wl", 7);
  const Assignment a = env.reset().assignment;

  const auto m1 = synthetic_benchmark(space, a, "wl", 7);
  const auto m2 = synthetic_benchmark(space, a, "wl", 7);
  CHECK(m1 == m2);
  CHECK(m1.at(kScoreMetric) > 0.0);
  CHECK(synthetic_benchmark(space, a, "wl", 8) != m1);
  CHECK(synthetic_benchmark(space, a, "other", 7) != m1);

  Assignment invalid = a;
  invalid.values["CFG_B"] = kYes;  // CFG_A is No
  CHECK_THROWS_AS(synthetic_benchmark(space, invalid, "wl", 7), Error);
}

TEST_CASE("planted optimum: separable argmax equals exhaustive brute force") {
  const ConfigSpace space = kcfgrl::testing::planted_bool_space(8);
  const auto [best, best_score] = brute_force_optimum(space, "bench", 13);

  // separable model: the optimum is the per-symbol argmax over Yes/No
  for (const auto& [name, sym] : space.symbols) {
    Assignment yes = best, no = best;
    yes.values[name] = kYes;
    no.values[name] = kNo;
    const double sy = synthetic_benchmark(space, yes, "bench", 13).at(kScoreMetric);
    const double sn = synthetic_benchmark(space, no, "bench", 13).at(kScoreMetric);
    CHECK(best.values.at(name) == (sy > sn ? kYes : kNo));
    CHECK(best_score == std::max(sy, sn));
  }

  // and it is unique: every other assignment scores strictly lower
  std::size_t ties = 0;
  for (std::size_t mask = 0; mask < 256; ++mask) {
    Assignment a;
    std::size_t bit = 0;
    for (const auto& [name, sym] : space.symbols)
      a.values[name] = (mask >> bit++) & 1 ? kYes : kNo;
    const double s = synthetic_benchmark(space, a, "bench", 13).at(kScoreMetric);
    CHECK(s <= best_score);
    if (s == best_score) ++ties;
  }
  CHECK(ties == 1);
}

TEST_CASE("all-default assignment reproduces the frozen baseline fixture") {
  // Recorded once from a direct evaluation of the benchmark on the 8-symbol
  // planted space with workload "bench", seed 13. Catches any drift in the
  // hashing or weight layout.
  const ConfigSpace space = kcfgrl::testing::planted_bool_space(8);
  Assignment all_default;
  for (const auto& [name, sym] : space.symbols) all_default.values[name] = sym.default_value();
  const double score = synthetic_benchmark(space, all_default, "bench", 13).at(kScoreMetric);
  CHECK(score == 125.29987854015666);
}

TEST_CASE("benchmark scores recompute from the dumped coefficient fixture") {
  const ConfigSpace space = env_space();
  const auto fixture = benchmark_coefficients(space, "wl", 7);
  CHECK(fixture["base"] == 100.0);

  // independent route: base + symbol weights + edge weights read off the fixture
  auto fixture_score = [&](const Assignment& a) {
    double score = fixture["base"].get<double>();
    for (const auto& [name, value] : a.values)
      score += fixture["symbol_weights"][name][value.key()].get<double>();
    for (const auto& [name, value] : a.values) {
      for (const auto& dep : space.at(name).depends_on) {
        auto it = a.values.find(dep.symbol);
        if (it == a.values.end()) continue;
        score += fixture["edge_weights"][name + "->" + dep.symbol]
                        [value.key() + "|" + it->second.key()]
                            .get<double>();
      }
    }
    return score;
  };

  const KernelEnv env(space, env_groups(), "wl", 7);
  KernelState state = env.reset();
  CHECK(fixture_score(state.assignment) == state.metrics.at(kScoreMetric));

  Assignment full{{{"CFG_A", kYes}, {"CFG_B", kYes}, {"GOV", Literal("powersave")},
                   {"HZ", Literal(64)}}};
  CHECK(fixture_score(full) == synthetic_benchmark(space, full, "wl", 7).at(kScoreMetric));

  SUBCASE("fixture file round-trips") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "kcfgrl_fixture_test";
    fs::create_directories(dir);
    const std::string path = (dir / "bench.json").string();
    dump_benchmark_fixture(space, "wl", 7, path);
    std::ifstream in(path);
    nlohmann::json loaded;
    in >> loaded;
    CHECK(loaded == fixture);
    fs::remove_all(dir);
  }
}

TEST_CASE("interaction terms respond to the dependent pair's joint values") {
  const ConfigSpace space = env_space();
  Assignment with_b{{{"CFG_A", kYes}, {"CFG_B", kYes}, {"GOV", Literal("performance")},
                     {"HZ", Literal(8)}}};
  Assignment without_b = with_b;
  without_b.values.erase("CFG_B");

  const double s_with = synthetic_benchmark(space, with_b, "wl", 7).at(kScoreMetric);
  const double s_without = synthetic_benchmark(space, without_b, "wl", 7).at(kScoreMetric);
  // CFG_B contributes its symbol weight plus the edge term; both nonnegative
  CHECK(s_with > s_without);
}

TEST_CASE("episode determinism: same seed and actions give identical trajectories") {
  const ConfigSpace space = env_space();
  const KernelEnv env(space, env_groups(), "wl", 9);

  auto run = [&] {
    std::vector<Transition> trace;
    KernelState s = env.reset();
    const std::vector<Action> actions{
        Action{0, Answer(BoolAnswer{"CFG_A", true}), true},
        Action{1, Answer(BoolAnswer{"CFG_B", true}), true},
        Action{2, Answer(ChoiceAnswer{"GOV"}), true},
        Action{3, Answer(ValueAnswer{"HZ", Literal(64)}), true},
    };
    for (const auto& a : actions) {
      trace.push_back(env.step(s, a, RewardWeights{1, 1, 1}));
      s = trace.back().next_state;
    }
    return trace;
  };

  const auto t1 = run();
  const auto t2 = run();
  REQUIRE(t1.size() == t2.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    CHECK(t1[i].next_state == t2[i].next_state);
    CHECK(t1[i].reward.combined == t2[i].reward.combined);
    CHECK(t1[i].reward.r_perf == t2[i].reward.r_perf);
  }
}

TEST_CASE("selection modifications assign the selection value") {
  const ConfigSpace space = env_space();
  const auto delta = answer_modification(space, Answer(ChoiceAnswer{"GOV"}));
  REQUIRE(delta.size() == 1);
  CHECK(delta.at("GOV") == Literal("powersave"));  // last option
  const auto dv = answer_modification(space, Answer(ValueAnswer{"HZ", Literal(16)}));
  CHECK(dv.at("HZ") == Literal(16));
}

TEST_CASE("the scoring oracle is a pluggable seam behind step") {
  struct FlatJudge : PerfJudge {
    PerfObservation judge(const Assignment&, const Assignment&,
                          const ConfigGroup&) const override {
      // fixed 25% improvement regardless of the modification
      return PerfObservation{{PerfEntry{100.0, 125.0, 0.0, 0.0, 1.0}}};
    }
  };

  const ConfigSpace space = env_space();
  const KernelEnv env(space, env_groups(), "wl", 7, std::make_shared<FlatJudge>());
  const Transition tr = env.step(env.reset(), Action{0, Answer(BoolAnswer{"CFG_A", true}), true},
                                 RewardWeights{1, 1, 1});
  CHECK(tr.reward.r_perf == 0.25);
  CHECK(tr.reward.combined == 2.25);
}

TEST_CASE("the synthetic judge prices modification complexity through lambda") {
  const ConfigSpace space = env_space();
  const SyntheticBenchmarkJudge judge(space, "wl", 7, /*lambda=*/1.0);
  const KernelEnv env(space, env_groups(), "wl", 7);
  const KernelState s0 = env.reset();

  Assignment proposed = s0.assignment;
  proposed.values["CFG_A"] = kYes;
  const ConfigGroup& group = env.groups()[0];  // one candidate

  const PerfObservation obs = judge.judge(s0.assignment, proposed, group);
  REQUIRE(obs.entries.size() == 1);
  CHECK(obs.entries[0].c_config == 1.0);
  CHECK(obs.entries[0].c_max == 1.0);
  CHECK(obs.entries[0].lambda == 1.0);
  CHECK(obs.entries[0].p_base == s0.metrics.at(kScoreMetric));
  // one changed symbol out of one candidate: multiplier 1 + 1*1/1 = 2
  const double plain =
      (obs.entries[0].p_new - obs.entries[0].p_base) / obs.entries[0].p_base;
  CHECK(perf_reward(obs) == doctest::Approx(2.0 * plain).epsilon(1e-12));
}

TEST_CASE("kb_query is exact-key lookup with in-band absence") {
  KnowledgeBase kb;
  kb.entries["CFG_A"] = "bool switch";
  CHECK(kb_query(kb, "CFG_A") == std::optional<std::string>("bool switch"));
  CHECK(kb_query(kb, "CFG_Z") == std::nullopt);
  CHECK(kb_query(kb, "") == std::nullopt);
}

TEST_CASE("KnowledgeBase::from_space summarizes symbols and dependencies") {
  const KnowledgeBase kb = KnowledgeBase::from_space(env_space());
  REQUIRE(kb.entries.size() == 4);
  const std::string b = kb.entries.at("CFG_B");
  CHECK(b.find("Bool") != std::string::npos);
  CHECK(b.find("requires CFG_A=Yes") != std::string::npos);
  CHECK(kb.entries.at("HZ").find("[8,64]") != std::string::npos);
}

TEST_CASE("KnowledgeBase::load_file parses the key/text JSONL format") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "kcfgrl_kb_test";
  fs::create_directories(dir);
  const std::string path = (dir / "kb.jsonl").string();
  {
    std::ofstream out(path);
    out << "{\"key\":\"CFG_A\",\"text\":\"doc A\"}\n# note\n{\"key\":\"CFG_B\",\"text\":\"doc B\"}\n";
  }
  const KnowledgeBase kb = KnowledgeBase::load_file(path);
  CHECK(kb.entries.size() == 2);
  CHECK(kb_query(kb, "CFG_B") == std::optional<std::string>("doc B"));

  {
    std::ofstream out(path);
    out << "{\"key\":\"X\",\"text\":\"1\"}\n{\"key\":\"X\",\"text\":\"2\"}\n";
  }
  CHECK_THROWS_WITH_AS(KnowledgeBase::load_file(path), doctest::Contains("duplicate"), Error);
  CHECK_THROWS_AS(KnowledgeBase::load_file((dir / "missing.jsonl").string()), Error);
  fs::remove_all(dir);
}
