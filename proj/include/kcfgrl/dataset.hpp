#ifndef KCFGRL_DATASET_HPP
#define KCFGRL_DATASET_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kcfgrl/config_space.hpp"

namespace kcfgrl {

// Source label attached to each group. Advisory metadata only; training
// never reads it.
enum class Provenance { Official, Historical, Expert, Benchmark, Other };

const char* to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);  // unknown -> Other

struct DatasetEntry {
  ConfigGroup group;
  Provenance provenance = Provenance::Other;
  friend bool operator==(const DatasetEntry&, const DatasetEntry&) = default;
};

struct Dataset {
  std::vector<DatasetEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  std::vector<ConfigGroup> groups() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Parses the dataset JSONL format ({"type","candidate","question","answer",
// "provenance"} per line) and validates every group against the space.
// Throws Error(Data) naming the first offending line. Unknown provenance
// labels map to Other and are reported in *warnings when given.
Dataset read_dataset(std::istream& in, const ConfigSpace& space,
                     std::vector<std::string>* warnings = nullptr);
Dataset read_dataset(const std::string& text, const ConfigSpace& space,
                     std::vector<std::string>* warnings = nullptr);
Dataset read_dataset_file(const std::string& path, const ConfigSpace& space,
                          std::vector<std::string>* warnings = nullptr);

// Canonical serialization: one record per line, keys sorted, menu answers
// sorted. parse(write(ds)) == ds and write(parse(write(ds))) == write(ds).
std::string write_dataset(const Dataset& ds);
void write_dataset_file(const Dataset& ds, const std::string& path);

// Canonical single-record form (the line format of write_dataset).
std::string write_entry(const DatasetEntry& entry);

// Per-line validation of a dataset document without failing fast; one report
// per non-comment line. Used by the validate command.
struct LineReport {
  std::size_t line = 0;
  bool ok = false;
  std::vector<std::string> violations;
};
std::vector<LineReport> validate_dataset_lines(std::istream& in, const ConfigSpace& space);

// Seed-deterministic partition into (warmup, exploration) with
// |warmup| = round-half-up(warmup_fraction * |ds|). Original order is kept
// within each part.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double warmup_fraction,
                                          std::uint64_t seed);

}  // namespace kcfgrl

#endif
