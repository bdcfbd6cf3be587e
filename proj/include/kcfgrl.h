/* kcfgrl.h - C interface to the kernel-configuration tuning library.
 *
 * All functions return a kcfgrl_status; on failure kcfgrl_last_error()
 * carries a human-readable message for the calling thread. Objects are
 * opaque handles released with their matching _free function. Strings
 * returned through char** outputs are owned by the caller and released
 * with kcfgrl_string_free().
 */
#ifndef KCFGRL_H
#define KCFGRL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kcfgrl_status {
  KCFGRL_OK = 0,
  KCFGRL_ERR_DATA = 1,     /* malformed or invariant-violating input */
  KCFGRL_ERR_IO = 2,       /* unreadable/unwritable files */
  KCFGRL_ERR_USAGE = 3,    /* bad arguments, dimension mismatch */
  KCFGRL_ERR_INTERNAL = 4, /* unexpected failure */
} kcfgrl_status;

const char* kcfgrl_version(void);

/* Message describing the most recent failure on this thread. */
const char* kcfgrl_last_error(void);

void kcfgrl_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Configuration space (symbol JSONL)                                  */

typedef struct kcfgrl_space kcfgrl_space;

kcfgrl_status kcfgrl_space_load(const char* path, kcfgrl_space** out);
kcfgrl_status kcfgrl_space_load_text(const char* text, kcfgrl_space** out);
void kcfgrl_space_free(kcfgrl_space* space);
size_t kcfgrl_space_symbol_count(const kcfgrl_space* space);

/* ------------------------------------------------------------------ */
/* Dataset (configuration-group JSONL)                                 */

typedef struct kcfgrl_dataset kcfgrl_dataset;

kcfgrl_status kcfgrl_dataset_read(const kcfgrl_space* space, const char* path,
                                  kcfgrl_dataset** out);
kcfgrl_status kcfgrl_dataset_write(const kcfgrl_dataset* dataset, const char* path);
void kcfgrl_dataset_free(kcfgrl_dataset* dataset);
size_t kcfgrl_dataset_size(const kcfgrl_dataset* dataset);

/* Splits into warmup/exploration parts; deterministic per seed. */
kcfgrl_status kcfgrl_dataset_split(const kcfgrl_dataset* dataset, double warmup_fraction,
                                   uint64_t seed, kcfgrl_dataset** warmup_out,
                                   kcfgrl_dataset** exploration_out);

/* Per-line validation report as JSON. *valid_out is 1 when every record
 * passed. Validation problems are data, not errors: the call succeeds as
 * long as the file is readable. */
kcfgrl_status kcfgrl_validate(const kcfgrl_space* space, const char* dataset_path,
                              char** report_json, int* valid_out);

/* ------------------------------------------------------------------ */
/* Pipeline commands                                                   */

/* config_json carries the training configuration:
 *   {"phase":"warmup"|"explore", "group_size":8, "clip_eps":0.2,
 *    "discount":0.99, "explore_eps":0.2, "explore_decay":0.95,
 *    "learning_rate":0.1, "smoothing_coef":1.0, "steps_per_episode":8,
 *    "episodes":25, "weights":{"alpha":1,"beta":1,"gamma_perf":1},
 *    "format_noise":0, "lambda":0, "two_sided_clip":false}
 * Artifacts (params.ckpt, curve.csv, manifest.json) land in out_dir;
 * checkpoint_in may be NULL/"" to start from scratch. The run manifest is
 * returned through manifest_json_out when non-NULL. */
kcfgrl_status kcfgrl_train(const kcfgrl_space* space, const kcfgrl_dataset* dataset,
                           const char* config_json, uint64_t seed, const char* checkpoint_in,
                           const char* out_dir, char** manifest_json_out);

/* Greedy evaluation of a checkpoint: writes the complete assignment file
 * and returns the report (validity rate, synthetic perf gain, per-group
 * answers) as JSON. */
kcfgrl_status kcfgrl_evaluate(const kcfgrl_space* space, const kcfgrl_dataset* dataset,
                              const char* checkpoint_path, uint64_t seed,
                              const char* assignment_out, char** report_json_out);

/* Aggregates a metrics CSV ("test,measured,reference") into a benchmark
 * report with the geometric-mean score index. */
kcfgrl_status kcfgrl_score(const char* csv_path, char** report_json_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KCFGRL_H */
