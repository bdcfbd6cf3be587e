#include "kcfgrl/env.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "kcfgrl/error.hpp"
#include "kcfgrl/rng.hpp"

namespace kcfgrl {

using nlohmann::json;

namespace {

// Synthetic benchmark shape: nonnegative hashed weights over a positive
// base, so every score is strictly positive and the argmax is plantable.
constexpr double kBase = 100.0;
constexpr double kSymbolScale = 10.0;
constexpr double kEdgeScale = 2.0;

}  // namespace

KnowledgeBase KnowledgeBase::from_space(const ConfigSpace& space) {
  KnowledgeBase kb;
  for (const auto& [name, sym] : space.symbols) {
    std::string text = name;
    text += ": kind ";
    text += to_string(sym.kind);
    if (sym.kind == ConfigKind::Value) {
      if (sym.range) {
        text += ", domain [" + std::to_string(sym.range->lo) + "," +
                std::to_string(sym.range->hi) + "]";
      } else {
        text += ", domain {";
        for (std::size_t i = 0; i < sym.literals.size(); ++i)
          text += (i ? "," : "") + sym.literals[i].display();
        text += "}";
      }
    } else {
      text += ", options {";
      for (std::size_t i = 0; i < sym.options.size(); ++i)
        text += (i ? "," : "") + sym.options[i];
      text += "}";
    }
    if (!sym.depends_on.empty()) {
      text += "; requires ";
      for (std::size_t i = 0; i < sym.depends_on.size(); ++i) {
        if (i) text += ", ";
        text += sym.depends_on[i].symbol + "=" + sym.depends_on[i].value.display();
      }
    }
    kb.entries[name] = std::move(text);
  }
  return kb;
}

KnowledgeBase KnowledgeBase::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open knowledge base file '" + path + "'");
  KnowledgeBase kb;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw_data("kb line " + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    if (!rec.is_object() || !rec.contains("key") || !rec["key"].is_string() ||
        !rec.contains("text") || !rec["text"].is_string())
      throw_data("kb line " + std::to_string(lineno) + ": expected {\"key\",\"text\"}");
    auto [it, inserted] = kb.entries.emplace(rec["key"].get<std::string>(),
                                             rec["text"].get<std::string>());
    if (!inserted) throw_data("kb line " + std::to_string(lineno) + ": duplicate key '" +
                              it->first + "'");
  }
  return kb;
}

std::optional<std::string> kb_query(const KnowledgeBase& kb, const std::string& query) {
  auto it = kb.entries.find(query);
  if (it == kb.entries.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, double> synthetic_benchmark(const ConfigSpace& space,
                                                  const Assignment& assignment,
                                                  const std::string& workload,
                                                  std::uint64_t seed) {
  if (!check_dependencies(space, assignment).empty())
    throw_data("synthetic_benchmark: dependency-invalid assignment");

  double score = kBase;
  for (const auto& [name, value] : assignment.values) {
    score += kSymbolScale * hashed_unit(seed, workload + "\x1f" + "sym" + "\x1f" + name +
                                                  "\x1f" + value.key());
  }
  // Interaction terms over dependency edges, keyed by the joint values of
  // the connected pair.
  for (const auto& [name, value] : assignment.values) {
    for (const auto& dep : space.at(name).depends_on) {
      auto pit = assignment.values.find(dep.symbol);
      if (pit == assignment.values.end()) continue;
      score += kEdgeScale * hashed_unit(seed, workload + "\x1f" + "dep" + "\x1f" + name + "\x1f" +
                                                  value.key() + "\x1f" + dep.symbol + "\x1f" +
                                                  pit->second.key());
    }
  }
  return {{kScoreMetric, score}};
}

nlohmann::json benchmark_coefficients(const ConfigSpace& space, const std::string& workload,
                                      std::uint64_t seed) {
  json symbol_weights = json::object();
  json edge_weights = json::object();
  for (const auto& [name, sym] : space.symbols) {
    json per_value = json::object();
    for (const auto& v : sym.domain_values(/*full_range=*/false)) {
      per_value[v.key()] = kSymbolScale * hashed_unit(seed, workload + "\x1f" + "sym" + "\x1f" +
                                                                name + "\x1f" + v.key());
    }
    symbol_weights[name] = std::move(per_value);

    for (const auto& dep : sym.depends_on) {
      json joint = json::object();
      for (const auto& cv : sym.domain_values()) {
        for (const auto& pv : space.at(dep.symbol).domain_values()) {
          joint[cv.key() + "|" + pv.key()] =
              kEdgeScale * hashed_unit(seed, workload + "\x1f" + "dep" + "\x1f" + name + "\x1f" +
                                                 cv.key() + "\x1f" + dep.symbol + "\x1f" +
                                                 pv.key());
        }
      }
      edge_weights[name + "->" + dep.symbol] = std::move(joint);
    }
  }
  return json{{"workload", workload},
              {"seed", seed},
              {"base", kBase},
              {"symbol_weights", symbol_weights},
              {"edge_weights", edge_weights}};
}

void dump_benchmark_fixture(const ConfigSpace& space, const std::string& workload,
                            std::uint64_t seed, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write benchmark fixture '" + path + "'");
  out << benchmark_coefficients(space, workload, seed).dump(2) << "\n";
}

std::map<std::string, Literal> answer_modification(const ConfigSpace& space,
                                                   const Answer& answer) {
  std::map<std::string, Literal> delta;
  if (const auto* b = std::get_if<BoolAnswer>(&answer)) {
    delta[b->symbol] = b->yes ? kYes : kNo;
  } else if (const auto* c = std::get_if<ChoiceAnswer>(&answer)) {
    delta[c->symbol] = space.at(c->symbol).selected_value();
  } else if (const auto* m = std::get_if<MenuAnswer>(&answer)) {
    for (const auto& s : m->symbols) delta[s] = space.at(s).selected_value();
  } else {
    const auto& v = std::get<ValueAnswer>(answer);
    delta[v.symbol] = v.value;
  }
  return delta;
}

SyntheticBenchmarkJudge::SyntheticBenchmarkJudge(const ConfigSpace& space, std::string workload,
                                                 std::uint64_t seed, double lambda)
    : space_(space), workload_(std::move(workload)), seed_(seed), lambda_(lambda) {}

PerfObservation SyntheticBenchmarkJudge::judge(const Assignment& baseline,
                                               const Assignment& proposed,
                                               const ConfigGroup& target) const {
  std::size_t n_changed = 0;
  for (const auto& [name, value] : proposed.values) {
    auto it = baseline.values.find(name);
    if (it == baseline.values.end() || it->second != value) ++n_changed;
  }
  for (const auto& [name, value] : baseline.values) {
    (void)value;
    if (!proposed.values.count(name)) ++n_changed;
  }

  PerfObservation obs;
  obs.entries.push_back(PerfEntry{
      synthetic_benchmark(space_, baseline, workload_, seed_).at(kScoreMetric),
      synthetic_benchmark(space_, proposed, workload_, seed_).at(kScoreMetric), lambda_,
      static_cast<double>(n_changed),
      static_cast<double>(std::max<std::size_t>(target.candidates.size(), 1))});
  return obs;
}

KernelEnv::KernelEnv(const ConfigSpace& space, std::vector<ConfigGroup> groups,
                     std::string workload, std::uint64_t seed, double lambda)
    : space_(space),
      groups_(std::move(groups)),
      workload_(workload),
      seed_(seed),
      judge_(std::make_shared<SyntheticBenchmarkJudge>(space, std::move(workload), seed, lambda)) {}

KernelEnv::KernelEnv(const ConfigSpace& space, std::vector<ConfigGroup> groups,
                     std::string workload, std::uint64_t seed,
                     std::shared_ptr<const PerfJudge> judge)
    : space_(space),
      groups_(std::move(groups)),
      workload_(std::move(workload)),
      seed_(seed),
      judge_(std::move(judge)) {}

KernelState KernelEnv::reset() const {
  Assignment assignment;
  for (const auto& name : topological_order(space_)) {
    const ConfigSymbol& sym = space_.at(name);
    bool deps_ok = true;
    for (const auto& dep : sym.depends_on) {
      auto it = assignment.values.find(dep.symbol);
      if (it == assignment.values.end() || it->second != dep.value) {
        deps_ok = false;
        break;
      }
    }
    // Symbols whose requirements the defaults cannot satisfy stay
    // unassigned, keeping the initial state dependency-valid.
    if (deps_ok) assignment.values[name] = sym.default_value();
  }

  KernelState state;
  state.assignment = std::move(assignment);
  state.workload = workload_;
  state.bench_seed = seed_;
  state.metrics = synthetic_benchmark(space_, state.assignment, workload_, seed_);
  return state;
}

Transition KernelEnv::step(const KernelState& state, const Action& action,
                           const RewardWeights& weights) const {
  if (action.group_index >= groups_.size())
    throw_usage("step: group index " + std::to_string(action.group_index) + " out of range");
  const ConfigGroup& group = groups_[action.group_index];

  Transition tr;
  tr.state = state;
  tr.action = action;

  const double r_format = action.format_ok ? 1.0 : 0.0;
  double r_answer = answer_reward(group, action.answer, space_);
  double r_perf = 0.0;
  KernelState next = state;

  if (r_answer == 1.0) {
    Assignment proposed = state.assignment;
    for (const auto& [name, value] : answer_modification(space_, *action.answer))
      proposed.values[name] = value;
    if (check_dependencies(space_, proposed).empty()) {
      next.assignment = std::move(proposed);
      next.metrics = synthetic_benchmark(space_, next.assignment, workload_, state.bench_seed);
      r_perf = perf_reward(judge_->judge(state.assignment, next.assignment, group));
    } else {
      // Type-valid answer that breaks a dependency: rejected in-band.
      r_answer = 0.0;
      next = state;
    }
  }

  tr.reward = combined_reward(r_answer, r_format, r_perf, weights);
  tr.next_state = std::move(next);
  return tr;
}

std::pair<Assignment, double> brute_force_optimum(const ConfigSpace& space,
                                                  const std::string& workload,
                                                  std::uint64_t seed) {
  std::vector<std::string> names;
  std::vector<std::vector<Literal>> domains;
  double combos = 1.0;
  for (const auto& [name, sym] : space.symbols) {
    names.push_back(name);
    domains.push_back(sym.domain_values(/*full_range=*/false));
    combos *= static_cast<double>(domains.back().size());
    if (combos > (1 << 20)) throw_usage("brute_force_optimum: space too large to enumerate");
  }

  Assignment best;
  double best_score = -1.0;
  std::vector<std::size_t> pick(names.size(), 0);
  while (true) {
    Assignment a;
    for (std::size_t i = 0; i < names.size(); ++i) a.values[names[i]] = domains[i][pick[i]];
    if (check_dependencies(space, a).empty()) {
      double s = synthetic_benchmark(space, a, workload, seed).at(kScoreMetric);
      if (s > best_score) {
        best_score = s;
        best = a;
      }
    }
    std::size_t d = 0;
    while (d < pick.size() && ++pick[d] == domains[d].size()) pick[d++] = 0;
    if (d == pick.size()) break;
  }
  if (best_score < 0.0) throw_data("brute_force_optimum: no dependency-valid assignment");
  return {best, best_score};
}

}  // namespace kcfgrl
