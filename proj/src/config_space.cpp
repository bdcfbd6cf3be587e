#include "kcfgrl/config_space.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "kcfgrl/error.hpp"

namespace kcfgrl {

using nlohmann::json;

std::string Literal::display() const {
  if (is_int()) return std::to_string(as_int());
  return as_text();
}

std::string Literal::key() const {
  if (is_int()) return "i:" + std::to_string(as_int());
  return "s:" + as_text();
}

json Literal::to_json() const {
  if (is_int()) return as_int();
  return as_text();
}

std::optional<Literal> Literal::from_json(const json& j) {
  if (j.is_number_integer()) return Literal(j.get<long long>());
  if (j.is_string()) return Literal(j.get<std::string>());
  return std::nullopt;
}

const char* to_string(ConfigKind k) {
  switch (k) {
    case ConfigKind::Bool: return "Bool";
    case ConfigKind::Choice: return "Choice";
    case ConfigKind::Menu: return "Menu";
    case ConfigKind::Value: return "Value";
  }
  return "?";
}

std::optional<ConfigKind> kind_from_string(std::string_view s) {
  if (s == "Bool") return ConfigKind::Bool;
  if (s == "Choice") return ConfigKind::Choice;
  if (s == "Menu") return ConfigKind::Menu;
  if (s == "Value") return ConfigKind::Value;
  return std::nullopt;
}

bool ConfigSymbol::in_domain(const Literal& v) const {
  switch (kind) {
    case ConfigKind::Bool:
      return !v.is_int() && (v == kYes || v == kNo);
    case ConfigKind::Choice:
    case ConfigKind::Menu:
      return !v.is_int() &&
             std::find(options.begin(), options.end(), v.as_text()) != options.end();
    case ConfigKind::Value:
      if (range) return v.is_int() && v.as_int() >= range->lo && v.as_int() <= range->hi;
      return std::find(literals.begin(), literals.end(), v) != literals.end();
  }
  return false;
}

Literal ConfigSymbol::default_value() const {
  switch (kind) {
    case ConfigKind::Bool: return kNo;
    case ConfigKind::Choice:
    case ConfigKind::Menu: return Literal(options.front());
    case ConfigKind::Value:
      if (range) return Literal(range->lo);
      return literals.front();
  }
  return kNo;
}

Literal ConfigSymbol::selected_value() const {
  switch (kind) {
    case ConfigKind::Bool: return kYes;
    case ConfigKind::Choice:
    case ConfigKind::Menu: return Literal(options.back());
    case ConfigKind::Value:
      if (range) return Literal(range->hi);
      return literals.back();
  }
  return kYes;
}

std::vector<Literal> ConfigSymbol::domain_values(bool full_range) const {
  std::vector<Literal> out;
  switch (kind) {
    case ConfigKind::Bool:
      out = {kYes, kNo};
      break;
    case ConfigKind::Choice:
    case ConfigKind::Menu:
      for (const auto& o : options) out.emplace_back(o);
      break;
    case ConfigKind::Value:
      if (range) {
        if (full_range) {
          for (long long v = range->lo; v <= range->hi; ++v) out.emplace_back(v);
        } else {
          long long mid = range->lo + (range->hi - range->lo) / 2;
          std::set<long long> vals{range->lo, mid, range->hi};
          for (long long v : vals) out.emplace_back(v);
        }
      } else {
        out = literals;
      }
      break;
  }
  return out;
}

ConfigKind answer_kind(const Answer& a) {
  switch (a.index()) {
    case 0: return ConfigKind::Bool;
    case 1: return ConfigKind::Choice;
    case 2: return ConfigKind::Menu;
    default: return ConfigKind::Value;
  }
}

json answer_to_json(const Answer& a) {
  if (const auto* b = std::get_if<BoolAnswer>(&a)) {
    return json{{b->symbol, b->yes ? "Yes" : "No"}};
  }
  if (const auto* c = std::get_if<ChoiceAnswer>(&a)) {
    return json(c->symbol);
  }
  if (const auto* m = std::get_if<MenuAnswer>(&a)) {
    std::vector<std::string> sorted = m->symbols;
    std::sort(sorted.begin(), sorted.end());
    return json(sorted);
  }
  const auto& v = std::get<ValueAnswer>(a);
  return json{{v.symbol, v.value.to_json()}};
}

std::optional<Answer> answer_from_json(const json& j, ConfigKind expected) {
  switch (expected) {
    case ConfigKind::Bool: {
      if (!j.is_object() || j.size() != 1) return std::nullopt;
      const auto it = j.begin();
      if (!it.value().is_string()) return std::nullopt;
      const std::string v = it.value().get<std::string>();
      if (v != "Yes" && v != "No") return std::nullopt;
      return Answer(BoolAnswer{it.key(), v == "Yes"});
    }
    case ConfigKind::Choice: {
      if (!j.is_string()) return std::nullopt;
      return Answer(ChoiceAnswer{j.get<std::string>()});
    }
    case ConfigKind::Menu: {
      if (!j.is_array() || j.empty()) return std::nullopt;
      std::vector<std::string> items;
      for (const auto& e : j) {
        if (!e.is_string()) return std::nullopt;
        items.push_back(e.get<std::string>());
      }
      std::sort(items.begin(), items.end());
      items.erase(std::unique(items.begin(), items.end()), items.end());
      return Answer(MenuAnswer{std::move(items)});
    }
    case ConfigKind::Value: {
      if (!j.is_object() || j.size() != 1) return std::nullopt;
      const auto it = j.begin();
      auto lit = Literal::from_json(it.value());
      if (!lit) return std::nullopt;
      return Answer(ValueAnswer{it.key(), *lit});
    }
  }
  return std::nullopt;
}

const ConfigSymbol& ConfigSpace::at(const std::string& name) const {
  auto it = symbols.find(name);
  if (it == symbols.end()) throw_data("unknown symbol '" + name + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

ConfigSymbol parse_symbol_record(const json& rec, std::size_t line) {
  auto fail = [line](const std::string& what) -> void {
    throw_data("line " + std::to_string(line) + ": " + what);
  };

  if (!rec.is_object()) fail("record is not a JSON object");
  if (!rec.contains("name") || !rec["name"].is_string() || rec["name"].get<std::string>().empty())
    fail("missing or empty \"name\"");
  if (!rec.contains("kind") || !rec["kind"].is_string()) fail("missing \"kind\"");

  ConfigSymbol sym;
  sym.name = rec["name"].get<std::string>();
  auto kind = kind_from_string(rec["kind"].get<std::string>());
  if (!kind) fail("symbol '" + sym.name + "': unknown kind \"" + rec["kind"].get<std::string>() + "\"");
  sym.kind = *kind;

  const json domain = rec.value("domain", json());
  switch (sym.kind) {
    case ConfigKind::Bool:
      sym.options = {"Yes", "No"};
      if (!domain.is_null() && domain != json({"Yes", "No"}))
        fail("symbol '" + sym.name + "': Bool domain must be [\"Yes\",\"No\"]");
      break;
    case ConfigKind::Choice:
    case ConfigKind::Menu: {
      if (!domain.is_array() || domain.empty())
        fail("symbol '" + sym.name + "': " + std::string(to_string(sym.kind)) +
             " domain must be a non-empty option list");
      std::set<std::string> seen;
      for (const auto& o : domain) {
        if (!o.is_string()) fail("symbol '" + sym.name + "': options must be strings");
        if (!seen.insert(o.get<std::string>()).second)
          fail("symbol '" + sym.name + "': duplicate option \"" + o.get<std::string>() + "\"");
        sym.options.push_back(o.get<std::string>());
      }
      break;
    }
    case ConfigKind::Value: {
      if (domain.is_object() && domain.contains("min") && domain.contains("max") &&
          domain["min"].is_number_integer() && domain["max"].is_number_integer()) {
        IntRange r{domain["min"].get<long long>(), domain["max"].get<long long>()};
        if (r.lo > r.hi) fail("symbol '" + sym.name + "': range min > max");
        sym.range = r;
      } else if (domain.is_array() && !domain.empty()) {
        std::set<std::string> seen;
        for (const auto& e : domain) {
          auto lit = Literal::from_json(e);
          if (!lit) fail("symbol '" + sym.name + "': literals must be integers or strings");
          if (!seen.insert(lit->key()).second)
            fail("symbol '" + sym.name + "': duplicate literal " + lit->display());
          sym.literals.push_back(*lit);
        }
      } else {
        fail("symbol '" + sym.name +
             "': Value domain must be {\"min\",\"max\"} or a non-empty literal list");
      }
      break;
    }
  }

  if (rec.contains("depends_on")) {
    if (!rec["depends_on"].is_array())
      fail("symbol '" + sym.name + "': \"depends_on\" must be an array");
    for (const auto& d : rec["depends_on"]) {
      if (!d.is_object() || !d.contains("symbol") || !d["symbol"].is_string() ||
          !d.contains("value"))
        fail("symbol '" + sym.name + "': dependency entries need \"symbol\" and \"value\"");
      auto lit = Literal::from_json(d["value"]);
      if (!lit) fail("symbol '" + sym.name + "': dependency value must be an integer or string");
      sym.depends_on.push_back(Dependency{d["symbol"].get<std::string>(), *lit});
    }
  }
  return sym;
}

// Cycle detection with path reporting; names in the reported cycle are sorted.
void reject_cycles(const ConfigSpace& space) {
  enum class Mark { White, Grey, Black };
  std::map<std::string, Mark> mark;
  for (const auto& [name, _] : space.symbols) mark[name] = Mark::White;

  std::vector<std::string> stack;
  auto dfs = [&](auto&& self, const std::string& name) -> void {
    mark[name] = Mark::Grey;
    stack.push_back(name);
    for (const auto& dep : space.at(name).depends_on) {
      if (mark[dep.symbol] == Mark::Grey) {
        auto it = std::find(stack.begin(), stack.end(), dep.symbol);
        std::vector<std::string> cycle(it, stack.end());
        std::sort(cycle.begin(), cycle.end());
        std::string msg = "dependency cycle involving {";
        for (std::size_t i = 0; i < cycle.size(); ++i)
          msg += (i ? "," : "") + cycle[i];
        throw_data(msg + "}");
      }
      if (mark[dep.symbol] == Mark::White) self(self, dep.symbol);
    }
    stack.pop_back();
    mark[name] = Mark::Black;
  };
  for (const auto& [name, _] : space.symbols)
    if (mark[name] == Mark::White) dfs(dfs, name);
}

}  // namespace

ConfigSpace load_config_space(std::istream& in) {
  ConfigSpace space;
  std::map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    while (!sv.empty() && (sv.back() == '\r' || sv.back() == ' ')) sv.remove_suffix(1);
    if (sv.empty() || sv.front() == '#') continue;

    json rec;
    try {
      rec = json::parse(sv);
    } catch (const json::exception& e) {
      throw_data("line " + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    ConfigSymbol sym = parse_symbol_record(rec, lineno);
    auto [it, inserted] = space.symbols.emplace(sym.name, std::move(sym));
    if (!inserted)
      throw_data("line " + std::to_string(lineno) + ": duplicate symbol name '" + it->first +
                 "' (first defined on line " + std::to_string(first_line[it->first]) + ")");
    first_line[it->first] = lineno;
  }

  for (const auto& [name, sym] : space.symbols) {
    for (const auto& dep : sym.depends_on) {
      if (!space.has(dep.symbol))
        throw_data("symbol '" + name + "': unknown dependency target '" + dep.symbol + "'");
      if (dep.symbol == name)
        throw_data("dependency cycle involving {" + name + "}");
    }
  }
  reject_cycles(space);
  return space;
}

ConfigSpace load_config_space(const std::string& text) {
  std::istringstream in(text);
  return load_config_space(in);
}

ConfigSpace load_config_space_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open config space file '" + path + "'");
  return load_config_space(in);
}

// ---------------------------------------------------------------------------
// Validation

ValidationReport validate_group(const ConfigSpace& space, const ConfigGroup& group) {
  ValidationReport report;
  auto add = [&report](std::string msg) { report.violations.push_back(std::move(msg)); };

  if (group.candidates.empty()) add("candidate list is empty");
  std::set<std::string> cset;
  for (const auto& c : group.candidates) {
    if (!cset.insert(c).second) add("duplicate candidate '" + c + "'");
    if (!space.has(c)) {
      add("candidate '" + c + "' not in config space");
    } else if (space.at(c).kind != group.type) {
      add("candidate '" + c + "' has kind " + to_string(space.at(c).kind) +
          ", incompatible with group type " + to_string(group.type));
    }
  }

  if (!group.answer) return report;
  const Answer& ans = *group.answer;
  if (answer_kind(ans) != group.type) {
    add(std::string("answer shape is ") + to_string(answer_kind(ans)) + ", expected " +
        to_string(group.type));
    return report;
  }

  switch (group.type) {
    case ConfigKind::Bool: {
      const auto& b = std::get<BoolAnswer>(ans);
      if (!cset.count(b.symbol)) add("answer symbol '" + b.symbol + "' not in candidate");
      break;
    }
    case ConfigKind::Choice: {
      const auto& c = std::get<ChoiceAnswer>(ans);
      if (!cset.count(c.symbol)) add("Choice answer '" + c.symbol + "' not in candidate");
      break;
    }
    case ConfigKind::Menu: {
      const auto& m = std::get<MenuAnswer>(ans);
      if (m.symbols.empty()) add("Menu answer selects nothing");
      for (const auto& s : m.symbols)
        if (!cset.count(s)) add("Menu answer symbol '" + s + "' not in candidate");
      break;
    }
    case ConfigKind::Value: {
      const auto& v = std::get<ValueAnswer>(ans);
      if (!cset.count(v.symbol)) {
        add("answer symbol '" + v.symbol + "' not in candidate");
      } else if (space.has(v.symbol) && !space.at(v.symbol).in_domain(v.value)) {
        add("answer value " + v.value.display() + " outside domain of '" + v.symbol + "'");
      }
      break;
    }
  }
  return report;
}

std::vector<DependencyViolation> check_dependencies(const ConfigSpace& space,
                                                    const Assignment& assignment) {
  std::vector<DependencyViolation> out;
  for (const auto& [name, value] : assignment.values) {
    (void)value;
    const ConfigSymbol& sym = space.at(name);  // throws on unknown name
    for (const auto& dep : sym.depends_on) {
      auto it = assignment.values.find(dep.symbol);
      if (it == assignment.values.end() || it->second != dep.value)
        out.push_back(DependencyViolation{name, dep});
    }
  }
  std::sort(out.begin(), out.end(), [](const DependencyViolation& a, const DependencyViolation& b) {
    return std::tie(a.symbol, a.unmet.symbol) < std::tie(b.symbol, b.unmet.symbol);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Dependency grouping

std::vector<std::string> topological_order(const ConfigSpace& space) {
  // Kahn's algorithm; the ready set is name-ordered so output is stable.
  std::map<std::string, std::size_t> unmet;
  std::map<std::string, std::vector<std::string>> children;
  for (const auto& [name, sym] : space.symbols) {
    unmet[name] = sym.depends_on.size();
    for (const auto& dep : sym.depends_on) children[dep.symbol].push_back(name);
  }
  std::set<std::string> ready;
  for (const auto& [name, n] : unmet)
    if (n == 0) ready.insert(name);

  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string name = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(name);
    for (const auto& child : children[name])
      if (--unmet[child] == 0) ready.insert(child);
  }
  if (order.size() != space.symbols.size()) throw_data("dependency graph is cyclic");
  return order;
}

std::vector<ConfigGroup> group_by_dependency(const ConfigSpace& space,
                                             std::size_t max_group_size) {
  if (max_group_size < 1) throw_usage("max_group_size must be >= 1");

  // Undirected connected components over dependency edges.
  std::map<std::string, std::string> root;
  auto find = [&root](std::string x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (const auto& [name, _] : space.symbols) root[name] = name;
  for (const auto& [name, sym] : space.symbols)
    for (const auto& dep : sym.depends_on) {
      auto a = find(name), b = find(dep.symbol);
      if (a != b) root[std::max(a, b)] = std::min(a, b);
    }

  // Members of each component in topological (parents-first) order.
  std::map<std::string, std::vector<std::string>> members;
  for (const auto& name : topological_order(space)) members[find(name)].push_back(name);

  std::vector<std::vector<std::string>> chunks;
  std::vector<std::string> pack;
  auto flush_pack = [&]() {
    if (!pack.empty()) {
      chunks.push_back(pack);
      pack.clear();
    }
  };
  for (auto& [_, comp] : members) {  // map order == name order of component roots
    if (comp.size() > max_group_size) {
      flush_pack();
      for (std::size_t i = 0; i < comp.size(); i += max_group_size) {
        std::size_t end = std::min(i + max_group_size, comp.size());
        chunks.emplace_back(comp.begin() + i, comp.begin() + end);
      }
    } else if (pack.size() + comp.size() <= max_group_size) {
      pack.insert(pack.end(), comp.begin(), comp.end());
    } else {
      flush_pack();
      pack = comp;
    }
  }
  flush_pack();

  // Refine each chunk into kind-homogeneous skeletons, preserving order.
  std::vector<ConfigGroup> out;
  for (const auto& chunk : chunks) {
    bool fresh = true;
    for (const auto& name : chunk) {
      ConfigKind k = space.at(name).kind;
      if (fresh || out.back().type != k) {
        out.push_back(ConfigGroup{k, {}, "", std::nullopt});
        fresh = false;
      }
      out.back().candidates.push_back(name);
    }
  }
  return out;
}

}  // namespace kcfgrl
