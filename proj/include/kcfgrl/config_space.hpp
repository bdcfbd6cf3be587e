#ifndef KCFGRL_CONFIG_SPACE_HPP
#define KCFGRL_CONFIG_SPACE_HPP

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace kcfgrl {

// A configuration value: either an integer or a text literal. Bool symbols
// use the text literals "Yes"/"No"; Value symbols may hold either kind.
class Literal {
 public:
  Literal() : value_(std::string()) {}
  explicit Literal(long long v) : value_(v) {}
  explicit Literal(std::string v) : value_(std::move(v)) {}
  explicit Literal(const char* v) : value_(std::string(v)) {}

  bool is_int() const { return std::holds_alternative<long long>(value_); }
  long long as_int() const { return std::get<long long>(value_); }
  const std::string& as_text() const { return std::get<std::string>(value_); }

  // Display form: integers as decimal digits, text verbatim.
  std::string display() const;
  // Injective key form ("i:<digits>" / "s:<text>"), used for hashing.
  std::string key() const;

  nlohmann::json to_json() const;
  static std::optional<Literal> from_json(const nlohmann::json& j);

  friend bool operator==(const Literal&, const Literal&) = default;
  friend auto operator<=>(const Literal&, const Literal&) = default;

 private:
  std::variant<long long, std::string> value_;
};

inline const Literal kYes{"Yes"};
inline const Literal kNo{"No"};

// Category of a symbol and, equally, of a configuration group. Bool symbols
// take Yes/No; Choice and Menu symbols take one option from a finite list;
// Value symbols take a literal from an integer range or a finite literal set.
enum class ConfigKind { Bool, Choice, Menu, Value };

const char* to_string(ConfigKind k);
std::optional<ConfigKind> kind_from_string(std::string_view s);

struct IntRange {
  long long lo = 0;
  long long hi = 0;
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

// Conjunctive dependency: the owning symbol may only be assigned while
// `symbol` is assigned `value`.
struct Dependency {
  std::string symbol;
  Literal value;
  friend bool operator==(const Dependency&, const Dependency&) = default;
};

struct ConfigSymbol {
  std::string name;
  ConfigKind kind = ConfigKind::Bool;
  // Bool: exactly {"Yes","No"}; Choice/Menu: the option list.
  std::vector<std::string> options;
  // Value domain: exactly one of `range` / `literals` is set.
  std::optional<IntRange> range;
  std::vector<Literal> literals;
  std::vector<Dependency> depends_on;

  bool in_domain(const Literal& v) const;
  // Conservative initial value: Bool "No", Choice/Menu first option, Value
  // range minimum or first literal.
  Literal default_value() const;
  // Value assigned when a Choice/Menu group answer selects this symbol:
  // Bool "Yes", Choice/Menu last option, Value range maximum or last literal.
  Literal selected_value() const;
  // Every value the symbol can take; integer ranges are represented by
  // {lo, midpoint, hi}. Used for canonical action enumeration and the
  // brute-force search helpers.
  std::vector<Literal> domain_values(bool full_range = false) const;

  friend bool operator==(const ConfigSymbol&, const ConfigSymbol&) = default;
};

// ---------------------------------------------------------------------------
// Typed answers. The shape depends on the group type:
//   Bool   {SYM:"Yes"/"No"}   Choice  "SYM"
//   Menu   ["A","B",...]      Value   {SYM:literal}

struct BoolAnswer {
  std::string symbol;
  bool yes = false;
  friend bool operator==(const BoolAnswer&, const BoolAnswer&) = default;
};
struct ChoiceAnswer {
  std::string symbol;
  friend bool operator==(const ChoiceAnswer&, const ChoiceAnswer&) = default;
};
struct MenuAnswer {
  std::vector<std::string> symbols;  // kept sorted + unique
  friend bool operator==(const MenuAnswer&, const MenuAnswer&) = default;
};
struct ValueAnswer {
  std::string symbol;
  Literal value;
  friend bool operator==(const ValueAnswer&, const ValueAnswer&) = default;
};

using Answer = std::variant<BoolAnswer, ChoiceAnswer, MenuAnswer, ValueAnswer>;

ConfigKind answer_kind(const Answer& a);
// Canonical JSON form (Menu sorted, single-key objects for Bool/Value).
nlohmann::json answer_to_json(const Answer& a);
// Strict inverse, guided by the expected group type. Returns nullopt on any
// shape mismatch (wrong JSON type, non-Yes/No bool, empty menu, ...).
std::optional<Answer> answer_from_json(const nlohmann::json& j, ConfigKind expected);

struct ConfigGroup {
  ConfigKind type = ConfigKind::Bool;
  std::vector<std::string> candidates;
  std::string question;
  std::optional<Answer> answer;  // skeletons produced by grouping carry none

  friend bool operator==(const ConfigGroup&, const ConfigGroup&) = default;
};

struct ConfigSpace {
  std::map<std::string, ConfigSymbol> symbols;  // keyed by name, sorted
  std::vector<ConfigGroup> groups;

  bool has(const std::string& name) const { return symbols.count(name) != 0; }
  const ConfigSymbol& at(const std::string& name) const;
};

// Partial assignment of symbols to values.
struct Assignment {
  std::map<std::string, Literal> values;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// ---------------------------------------------------------------------------
// Operations

// Parses the symbol JSONL format: one {"name","kind","domain","depends_on"}
// record per line, '#' lines ignored. Throws Error(Data) naming the line of
// the first duplicate name, unknown dependency target, dependency cycle or
// malformed record.
ConfigSpace load_config_space(std::istream& in);
ConfigSpace load_config_space(const std::string& text);
ConfigSpace load_config_space_file(const std::string& path);

// Group invariant check. Violations are data, not failures.
struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};
ValidationReport validate_group(const ConfigSpace& space, const ConfigGroup& group);

// One unsatisfied (symbol, requirement) pair.
struct DependencyViolation {
  std::string symbol;
  Dependency unmet;
  friend bool operator==(const DependencyViolation&, const DependencyViolation&) = default;
};

// Lists the violated dependency pairs of the assigned symbols, sorted by
// (symbol, required symbol). Empty result == dependency-valid. Throws
// Error(Data) if the assignment names an unknown symbol.
std::vector<DependencyViolation> check_dependencies(const ConfigSpace& space,
                                                    const Assignment& assignment);

// Dependency-based batching: partitions the symbol universe into group
// skeletons. Symbols joined by dependency edges are co-grouped when the
// component fits within max_group_size, otherwise the component is split
// along the hierarchy (parents before children). Small components are packed
// together in name order. Chunks are refined per kind so each skeleton is
// type-homogeneous.
std::vector<ConfigGroup> group_by_dependency(const ConfigSpace& space,
                                             std::size_t max_group_size);

// Topological order of the dependency graph (parents before children, name
// order breaking ties). Present for every loaded space (acyclicity).
std::vector<std::string> topological_order(const ConfigSpace& space);

}  // namespace kcfgrl

#endif
