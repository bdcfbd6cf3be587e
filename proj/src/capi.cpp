#include "kcfgrl.h"

#include <cstring>
#include <memory>
#include <string>

#include "kcfgrl/error.hpp"
#include "kcfgrl/runner.hpp"

using namespace kcfgrl;

struct kcfgrl_space {
  ConfigSpace space;
  std::string origin;  // load path, recorded in run manifests
};

struct kcfgrl_dataset {
  ConfigSpace space;  // the companion space the groups were validated against
  Dataset dataset;
  std::string origin;
};

namespace {

thread_local std::string g_last_error;

kcfgrl_status set_error(ErrorKind kind, const std::string& message) {
  g_last_error = message;
  switch (kind) {
    case ErrorKind::Data: return KCFGRL_ERR_DATA;
    case ErrorKind::Io: return KCFGRL_ERR_IO;
    case ErrorKind::Usage: return KCFGRL_ERR_USAGE;
  }
  return KCFGRL_ERR_INTERNAL;
}

// Runs fn, translating exceptions to status codes.
template <typename Fn>
kcfgrl_status guarded(Fn&& fn) {
  try {
    fn();
    return KCFGRL_OK;
  } catch (const Error& e) {
    return set_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KCFGRL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return KCFGRL_ERR_INTERNAL;
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

kcfgrl_status require(bool cond, const char* what) {
  if (cond) return KCFGRL_OK;
  g_last_error = what;
  return KCFGRL_ERR_USAGE;
}

}  // namespace

extern "C" {

const char* kcfgrl_version(void) { return "1.0.0"; }

const char* kcfgrl_last_error(void) { return g_last_error.c_str(); }

void kcfgrl_string_free(char* s) { delete[] s; }

kcfgrl_status kcfgrl_space_load(const char* path, kcfgrl_space** out) {
  if (auto st = require(path && out, "kcfgrl_space_load: null argument")) return st;
  return guarded([&] {
    auto handle = std::make_unique<kcfgrl_space>();
    handle->space = load_config_space_file(path);
    handle->origin = path;
    *out = handle.release();
  });
}

kcfgrl_status kcfgrl_space_load_text(const char* text, kcfgrl_space** out) {
  if (auto st = require(text && out, "kcfgrl_space_load_text: null argument")) return st;
  return guarded([&] {
    auto handle = std::make_unique<kcfgrl_space>();
    handle->space = load_config_space(std::string(text));
    *out = handle.release();
  });
}

void kcfgrl_space_free(kcfgrl_space* space) { delete space; }

size_t kcfgrl_space_symbol_count(const kcfgrl_space* space) {
  return space ? space->space.symbols.size() : 0;
}

kcfgrl_status kcfgrl_dataset_read(const kcfgrl_space* space, const char* path,
                                  kcfgrl_dataset** out) {
  if (auto st = require(space && path && out, "kcfgrl_dataset_read: null argument")) return st;
  return guarded([&] {
    auto handle = std::make_unique<kcfgrl_dataset>();
    handle->space = space->space;
    handle->dataset = read_dataset_file(path, space->space);
    handle->origin = path;
    *out = handle.release();
  });
}

kcfgrl_status kcfgrl_dataset_write(const kcfgrl_dataset* dataset, const char* path) {
  if (auto st = require(dataset && path, "kcfgrl_dataset_write: null argument")) return st;
  return guarded([&] { write_dataset_file(dataset->dataset, path); });
}

void kcfgrl_dataset_free(kcfgrl_dataset* dataset) { delete dataset; }

size_t kcfgrl_dataset_size(const kcfgrl_dataset* dataset) {
  return dataset ? dataset->dataset.size() : 0;
}

kcfgrl_status kcfgrl_dataset_split(const kcfgrl_dataset* dataset, double warmup_fraction,
                                   uint64_t seed, kcfgrl_dataset** warmup_out,
                                   kcfgrl_dataset** exploration_out) {
  if (auto st = require(dataset && warmup_out && exploration_out,
                        "kcfgrl_dataset_split: null argument"))
    return st;
  return guarded([&] {
    auto [warm, explore] = split_dataset(dataset->dataset, warmup_fraction, seed);
    auto w = std::make_unique<kcfgrl_dataset>(
        kcfgrl_dataset{dataset->space, std::move(warm), dataset->origin});
    auto e = std::make_unique<kcfgrl_dataset>(
        kcfgrl_dataset{dataset->space, std::move(explore), dataset->origin});
    *warmup_out = w.release();
    *exploration_out = e.release();
  });
}

kcfgrl_status kcfgrl_validate(const kcfgrl_space* space, const char* dataset_path,
                              char** report_json, int* valid_out) {
  if (auto st = require(space && dataset_path, "kcfgrl_validate: null argument")) return st;
  return guarded([&] {
    nlohmann::json report = validate_report(space->space, dataset_path);
    if (valid_out) *valid_out = report["ok"].get<bool>() ? 1 : 0;
    if (report_json) *report_json = copy_string(report.dump(2));
  });
}

kcfgrl_status kcfgrl_train(const kcfgrl_space* space, const kcfgrl_dataset* dataset,
                           const char* config_json, uint64_t seed, const char* checkpoint_in,
                           const char* out_dir, char** manifest_json_out) {
  if (auto st = require(space && dataset && config_json && out_dir,
                        "kcfgrl_train: null argument"))
    return st;
  return guarded([&] {
    nlohmann::json cfg = nlohmann::json::parse(config_json, nullptr, false);
    if (cfg.is_discarded()) throw_usage("kcfgrl_train: config_json is not valid JSON");
    TrainConfig config = TrainConfig::from_json(cfg);

    TrainPaths paths;
    paths.space_path = space->origin;
    paths.dataset_path = dataset->origin;
    paths.out_dir = out_dir;
    paths.checkpoint_in = checkpoint_in ? checkpoint_in : "";
    nlohmann::json manifest = run_training(space->space, dataset->dataset, config, seed, paths);
    if (manifest_json_out) *manifest_json_out = copy_string(manifest.dump(2));
  });
}

kcfgrl_status kcfgrl_evaluate(const kcfgrl_space* space, const kcfgrl_dataset* dataset,
                              const char* checkpoint_path, uint64_t seed,
                              const char* assignment_out, char** report_json_out) {
  if (auto st = require(space && dataset && checkpoint_path, "kcfgrl_evaluate: null argument"))
    return st;
  return guarded([&] {
    EvalPaths paths;
    paths.checkpoint = checkpoint_path;
    paths.assignment_out = assignment_out ? assignment_out : "";
    nlohmann::json report = run_evaluation(space->space, dataset->dataset, seed, paths);
    if (report_json_out) *report_json_out = copy_string(report.dump(2));
  });
}

kcfgrl_status kcfgrl_score(const char* csv_path, char** report_json_out) {
  if (auto st = require(csv_path != nullptr, "kcfgrl_score: null argument")) return st;
  return guarded([&] {
    nlohmann::json report = score_report(csv_path);
    if (report_json_out) *report_json_out = copy_string(report.dump(2));
  });
}

}  // extern "C"
