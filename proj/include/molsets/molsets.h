/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the MolSets library. All objects are opaque handles owned by
 * the caller and released with the matching *_free function. Every call that
 * can fail returns an ms_status; the message of the most recent failure on
 * the calling thread is available from ms_last_error().
 */

#ifndef MOLSETS_MOLSETS_H
#define MOLSETS_MOLSETS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MOLSETS_BUILDING_LIBRARY)
#    define MS_API __declspec(dllexport)
#  else
#    define MS_API __declspec(dllimport)
#  endif
#else
#  define MS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ms_status {
  MS_OK = 0,
  MS_ERR_USAGE = 1,     /* invalid argument or configuration value */
  MS_ERR_DATA = 2,      /* unreadable file, malformed record, bad checkpoint */
  MS_ERR_NUMERIC = 3,   /* non-finite loss or degenerate statistic */
  MS_ERR_PARSE = 4,     /* SMILES syntax or unsupported chemistry */
  MS_ERR_DIMENSION = 5, /* tensor shape mismatch */
  MS_ERR_INTERNAL = 6,
  MS_PARTIAL = 7        /* finished, but some inputs were skipped */
} ms_status;

typedef enum ms_log_level {
  MS_LOG_DEBUG = 0,
  MS_LOG_INFO = 1,
  MS_LOG_WARNING = 2,
  MS_LOG_ERROR = 3,
  MS_LOG_OFF = 4
} ms_log_level;

typedef struct ms_dataset ms_dataset;
typedef struct ms_model ms_model;

typedef struct ms_metrics {
  double pearson_rp;
  double spearman_rs;
  double mse;
  size_t n;
} ms_metrics;

typedef struct ms_train_summary {
  size_t epochs_run;
  size_t best_epoch;
  double best_val_loss;
  int early_stopped;
} ms_train_summary;

typedef struct ms_screen_summary {
  size_t num_candidates;
  size_t num_scored;
  size_t num_skipped;
} ms_screen_summary;

typedef struct ms_permutation_report {
  size_t num_tested;
  size_t num_skipped;
  double max_abs_diff;
  double mean_abs_diff;
  double fraction_changed;
} ms_permutation_report;

MS_API const char* ms_version(void);
MS_API const char* ms_last_error(void);
MS_API const char* ms_status_name(ms_status status);
MS_API void ms_string_free(char* text);
MS_API void ms_set_log_level(ms_log_level level);

/* Graph of a SMILES string as JSON; free the result with ms_string_free. */
MS_API ms_status ms_featurize(const char* smiles, char** json_out);

/* Datasets. `lenient` skips malformed rows; `skipped` may be NULL. */
MS_API ms_status ms_dataset_load(const char* path, int lenient, ms_dataset** out, size_t* skipped);
MS_API ms_status ms_dataset_save(const ms_dataset* dataset, const char* path);
MS_API size_t ms_dataset_size(const ms_dataset* dataset);
/* One 298 K point per mixture, from a measurement or the Arrhenius fit. */
MS_API ms_status ms_dataset_prepare(const ms_dataset* dataset, int lenient, ms_dataset** out, size_t* dropped);
MS_API ms_status ms_dataset_split(const ms_dataset* dataset, const double ratios[3], uint64_t seed,
                                  ms_dataset** train, ms_dataset** val, ms_dataset** test);
MS_API ms_status ms_dataset_synthesize(size_t n, uint64_t seed, double noise_std, ms_dataset** out);
MS_API void ms_dataset_free(ms_dataset* dataset);

/* Models. `config_json` holds flat overrides (may be NULL or empty);
 * `variant` is molsets, wsum or concat; `conv` is graphconv, sageconv,
 * gcnconv, gatconv or dmpnn. */
MS_API ms_status ms_model_create(const char* config_json, const char* variant, const char* conv, ms_model** out);
MS_API ms_status ms_model_load(const char* path, ms_model** out);
MS_API ms_status ms_model_save(const ms_model* model, const char* path);
MS_API ms_status ms_model_config_json(const ms_model* model, char** json_out);
MS_API void ms_model_free(ms_model* model);

/* Trains in place; on success the model holds the best-epoch parameters.
 * `history_path` and `summary` may be NULL. */
MS_API ms_status ms_model_train(ms_model* model, const ms_dataset* train_data, const ms_dataset* val_data,
                                const char* config_json, const char* history_path, ms_train_summary* summary);
/* Writes ms_dataset_size(dataset) predictions; `capacity` must be large enough. */
MS_API ms_status ms_model_predict(const ms_model* model, const ms_dataset* dataset, double* out, size_t capacity);
MS_API ms_status ms_model_evaluate(const ms_model* model, const ms_dataset* dataset, ms_metrics* out);
MS_API ms_status ms_model_export_representations(const ms_model* model, const ms_dataset* dataset,
                                                 const char* out_csv);

/* Ranks all equal-weight binary mixtures of the listed solvents with each
 * listed salt at 1 mol/kg. Returns MS_PARTIAL when some candidates could not
 * be scored; the CSV is still written. */
MS_API ms_status ms_screen(const ms_model* model, const char* solvents_path, const char* salts_path,
                           const char* out_csv, size_t threads, int use_cache, ms_screen_summary* summary);

MS_API ms_status ms_permutation_test(const ms_model* model, const ms_dataset* dataset, uint64_t seed,
                                     ms_permutation_report* out);

#ifdef __cplusplus
}
#endif

#endif /* MOLSETS_MOLSETS_H */
