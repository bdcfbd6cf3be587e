#include "kcfgrl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "kcfgrl/error.hpp"
#include "kcfgrl/rng.hpp"

namespace kcfgrl {

using nlohmann::json;

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Official: return "official";
    case Provenance::Historical: return "historical";
    case Provenance::Expert: return "expert";
    case Provenance::Benchmark: return "benchmark";
    case Provenance::Other: return "other";
  }
  return "other";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "official") return Provenance::Official;
  if (s == "historical") return Provenance::Historical;
  if (s == "expert") return Provenance::Expert;
  if (s == "benchmark") return Provenance::Benchmark;
  return Provenance::Other;
}

std::vector<ConfigGroup> Dataset::groups() const {
  std::vector<ConfigGroup> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.group);
  return out;
}

namespace {

// Parses one dataset record. On shape problems returns the violation list
// instead of an entry; the strict reader turns those into errors, the
// line validator keeps them as data.
struct RecordResult {
  std::optional<DatasetEntry> entry;
  std::vector<std::string> violations;
  std::optional<std::string> warning;
};

RecordResult parse_record(std::string_view text, const ConfigSpace& space) {
  RecordResult res;
  json rec;
  try {
    rec = json::parse(text);
  } catch (const json::exception& e) {
    res.violations.push_back(std::string("malformed JSON: ") + e.what());
    return res;
  }
  if (!rec.is_object()) {
    res.violations.push_back("record is not a JSON object");
    return res;
  }
  if (!rec.contains("type") || !rec["type"].is_string()) {
    res.violations.push_back("missing \"type\"");
    return res;
  }
  auto kind = kind_from_string(rec["type"].get<std::string>());
  if (!kind) {
    res.violations.push_back("unknown type \"" + rec["type"].get<std::string>() + "\"");
    return res;
  }

  ConfigGroup group;
  group.type = *kind;
  const json cand = rec.value("candidate", json());
  if (cand.is_string()) {
    group.candidates.push_back(cand.get<std::string>());
  } else if (cand.is_array()) {
    for (const auto& c : cand) {
      if (!c.is_string()) {
        res.violations.push_back("candidate entries must be strings");
        return res;
      }
      group.candidates.push_back(c.get<std::string>());
    }
  } else {
    res.violations.push_back("missing \"candidate\"");
    return res;
  }
  group.question = rec.value("question", "");

  if (!rec.contains("answer")) {
    res.violations.push_back("missing \"answer\"");
    return res;
  }
  auto ans = answer_from_json(rec["answer"], group.type);
  if (!ans) {
    res.violations.push_back(std::string("answer shape invalid for type ") +
                             to_string(group.type));
    return res;
  }
  group.answer = *ans;

  ValidationReport report = validate_group(space, group);
  if (!report.ok()) {
    res.violations = report.violations;
    return res;
  }

  DatasetEntry entry;
  entry.group = std::move(group);
  if (rec.contains("provenance")) {
    if (!rec["provenance"].is_string()) {
      res.violations.push_back("\"provenance\" must be a string");
      return res;
    }
    const std::string label = rec["provenance"].get<std::string>();
    entry.provenance = provenance_from_string(label);
    if (entry.provenance == Provenance::Other && label != "other")
      res.warning = "unknown provenance \"" + label + "\" mapped to \"other\"";
  }
  res.entry = std::move(entry);
  return res;
}

bool skippable(std::string_view sv) {
  return sv.empty() || sv.front() == '#';
}

std::string_view trim_eol(const std::string& line) {
  std::string_view sv(line);
  while (!sv.empty() && (sv.back() == '\r' || sv.back() == ' ')) sv.remove_suffix(1);
  return sv;
}

}  // namespace

Dataset read_dataset(std::istream& in, const ConfigSpace& space,
                     std::vector<std::string>* warnings) {
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim_eol(line);
    if (skippable(sv)) continue;
    RecordResult res = parse_record(sv, space);
    if (!res.entry) {
      std::string msg = "line " + std::to_string(lineno) + ": ";
      for (std::size_t i = 0; i < res.violations.size(); ++i)
        msg += (i ? "; " : "") + res.violations[i];
      throw_data(msg);
    }
    if (res.warning && warnings)
      warnings->push_back("line " + std::to_string(lineno) + ": " + *res.warning);
    ds.entries.push_back(std::move(*res.entry));
  }
  return ds;
}

Dataset read_dataset(const std::string& text, const ConfigSpace& space,
                     std::vector<std::string>* warnings) {
  std::istringstream in(text);
  return read_dataset(in, space, warnings);
}

Dataset read_dataset_file(const std::string& path, const ConfigSpace& space,
                          std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open dataset file '" + path + "'");
  return read_dataset(in, space, warnings);
}

std::string write_entry(const DatasetEntry& entry) {
  // nlohmann objects keep keys sorted, which is exactly the canonical form.
  json rec;
  rec["type"] = to_string(entry.group.type);
  rec["candidate"] = entry.group.candidates;
  rec["question"] = entry.group.question;
  rec["answer"] = entry.group.answer ? answer_to_json(*entry.group.answer) : json();
  rec["provenance"] = to_string(entry.provenance);
  return rec.dump();
}

std::string write_dataset(const Dataset& ds) {
  std::string out;
  for (const auto& entry : ds.entries) {
    out += write_entry(entry);
    out += '\n';
  }
  return out;
}

void write_dataset_file(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write dataset file '" + path + "'");
  out << write_dataset(ds);
}

std::vector<LineReport> validate_dataset_lines(std::istream& in, const ConfigSpace& space) {
  std::vector<LineReport> reports;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim_eol(line);
    if (skippable(sv)) continue;
    RecordResult res = parse_record(sv, space);
    LineReport rep;
    rep.line = lineno;
    rep.ok = res.entry.has_value();
    rep.violations = std::move(res.violations);
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double warmup_fraction,
                                          std::uint64_t seed) {
  if (ds.empty()) throw_usage("cannot split an empty dataset");
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0))
    throw_usage("warmup_fraction must lie in (0,1)");

  const std::size_t n = ds.size();
  const std::size_t k =
      static_cast<std::size_t>(std::floor(warmup_fraction * static_cast<double>(n) + 0.5));

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates
    std::size_t j = rng.next_below(i);
    std::swap(idx[i - 1], idx[j]);
  }
  std::vector<std::size_t> warm(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(warm.begin(), warm.end());
  std::vector<bool> in_warm(n, false);
  for (std::size_t i : warm) in_warm[i] = true;

  std::pair<Dataset, Dataset> out;
  for (std::size_t i = 0; i < n; ++i)
    (in_warm[i] ? out.first : out.second).entries.push_back(ds.entries[i]);
  return out;
}

}  // namespace kcfgrl
