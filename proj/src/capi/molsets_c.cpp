// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#include "molsets/molsets.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <string>
#include <vector>

#include "molsets/chem_graph.hpp"
#include "molsets/data.hpp"
#include "molsets/error.hpp"
#include "molsets/log.hpp"
#include "molsets/model.hpp"
#include "molsets/screening.hpp"
#include "molsets/train.hpp"

struct ms_dataset {
  std::vector<molsets::data::MixtureRecord> records;
};

struct ms_model {
  molsets::model::MolSetsModel model;
};

namespace {

using namespace molsets;

thread_local std::string g_last_error;

ms_status fail(ms_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
ms_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const ParseError& e) {
    return fail(MS_ERR_PARSE, e.what());
  } catch (const FeaturizationError& e) {
    return fail(MS_ERR_PARSE, e.what());
  } catch (const DataError& e) {
    return fail(MS_ERR_DATA, e.what());
  } catch (const NumericError& e) {
    return fail(MS_ERR_NUMERIC, e.what());
  } catch (const DimensionError& e) {
    return fail(MS_ERR_DIMENSION, e.what());
  } catch (const ContractError& e) {
    return fail(MS_ERR_USAGE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MS_ERR_INTERNAL, "unknown error");
  }
}

char* duplicate(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

std::string text_or_empty(const char* text) { return text ? std::string(text) : std::string(); }

}  // namespace

#define MS_REQUIRE(cond, what) \
  if (!(cond)) return fail(MS_ERR_USAGE, what)

extern "C" {

const char* ms_version(void) { return "1.0.0"; }

const char* ms_last_error(void) { return g_last_error.c_str(); }

const char* ms_status_name(ms_status status) {
  switch (status) {
    case MS_OK: return "ok";
    case MS_ERR_USAGE: return "usage error";
    case MS_ERR_DATA: return "data error";
    case MS_ERR_NUMERIC: return "numeric error";
    case MS_ERR_PARSE: return "parse error";
    case MS_ERR_DIMENSION: return "dimension error";
    case MS_ERR_INTERNAL: return "internal error";
    case MS_PARTIAL: return "partial success";
  }
  return "unknown status";
}

void ms_string_free(char* text) { std::free(text); }

void ms_set_log_level(ms_log_level level) { set_log_level(static_cast<LogLevel>(level)); }

ms_status ms_featurize(const char* smiles, char** json_out) {
  MS_REQUIRE(smiles && json_out, "ms_featurize: null argument");
  return guarded([&] {
    *json_out = duplicate(chem::graph_to_json(chem::build_graph(smiles)));
    return MS_OK;
  });
}

ms_status ms_dataset_load(const char* path, int lenient, ms_dataset** out, size_t* skipped) {
  MS_REQUIRE(path && out, "ms_dataset_load: null argument");
  return guarded([&] {
    data::LoadReport report;
    auto records = data::load_dataset(path, lenient ? data::LoadMode::Lenient : data::LoadMode::Strict, &report);
    if (skipped) *skipped = report.rows_skipped;
    *out = new ms_dataset{std::move(records)};
    return MS_OK;
  });
}

ms_status ms_dataset_save(const ms_dataset* dataset, const char* path) {
  MS_REQUIRE(dataset && path, "ms_dataset_save: null argument");
  return guarded([&] {
    data::save_dataset(path, dataset->records);
    return MS_OK;
  });
}

size_t ms_dataset_size(const ms_dataset* dataset) { return dataset ? dataset->records.size() : 0; }

ms_status ms_dataset_prepare(const ms_dataset* dataset, int lenient, ms_dataset** out, size_t* dropped) {
  MS_REQUIRE(dataset && out, "ms_dataset_prepare: null argument");
  return guarded([&] {
    data::LoadReport report;
    auto records =
        data::prepare_targets(dataset->records, lenient ? data::LoadMode::Lenient : data::LoadMode::Strict, &report);
    if (dropped) *dropped = report.rows_skipped;
    *out = new ms_dataset{std::move(records)};
    return MS_OK;
  });
}

ms_status ms_dataset_split(const ms_dataset* dataset, const double ratios[3], uint64_t seed, ms_dataset** train,
                           ms_dataset** val, ms_dataset** test) {
  MS_REQUIRE(dataset && ratios && train && val && test, "ms_dataset_split: null argument");
  return guarded([&] {
    auto split = data::split_dataset(dataset->records, {ratios[0], ratios[1], ratios[2]}, seed);
    *train = new ms_dataset{std::move(split.train)};
    *val = new ms_dataset{std::move(split.validation)};
    *test = new ms_dataset{std::move(split.test)};
    return MS_OK;
  });
}

ms_status ms_dataset_synthesize(size_t n, uint64_t seed, double noise_std, ms_dataset** out) {
  MS_REQUIRE(out, "ms_dataset_synthesize: null argument");
  return guarded([&] {
    *out = new ms_dataset{data::generate_synthetic(n, seed, noise_std)};
    return MS_OK;
  });
}

void ms_dataset_free(ms_dataset* dataset) { delete dataset; }

ms_status ms_model_create(const char* config_json, const char* variant, const char* conv, ms_model** out) {
  MS_REQUIRE(out, "ms_model_create: null argument");
  return guarded([&] {
    const std::string variant_name = variant ? variant : "molsets";
    const std::string conv_name = conv ? conv : "graphconv";
    const auto v = model::variant_from_string(variant_name);
    if (!v) return fail(MS_ERR_USAGE, "unknown variant '" + variant_name + "' (expected molsets, wsum or concat)");
    const auto kind = gnn::conv_kind_from_string(conv_name);
    if (!kind) {
      return fail(MS_ERR_USAGE, "unknown convolution '" + conv_name +
                                    "' (expected graphconv, sageconv, gcnconv, gatconv or dmpnn)");
    }
    auto config = model::config_from_settings(text_or_empty(config_json), *kind, *v);
    *out = new ms_model{model::MolSetsModel(config)};
    return MS_OK;
  });
}

ms_status ms_model_load(const char* path, ms_model** out) {
  MS_REQUIRE(path && out, "ms_model_load: null argument");
  return guarded([&] {
    *out = new ms_model{model::load_checkpoint(path)};
    return MS_OK;
  });
}

ms_status ms_model_save(const ms_model* model, const char* path) {
  MS_REQUIRE(model && path, "ms_model_save: null argument");
  return guarded([&] {
    model::save_checkpoint(model->model, path);
    return MS_OK;
  });
}

ms_status ms_model_config_json(const ms_model* model, char** json_out) {
  MS_REQUIRE(model && json_out, "ms_model_config_json: null argument");
  return guarded([&] {
    *json_out = duplicate(model::config_to_json(model->model.config()));
    return MS_OK;
  });
}

void ms_model_free(ms_model* model) { delete model; }

ms_status ms_model_train(ms_model* model, const ms_dataset* train_data, const ms_dataset* val_data, const char* config_json,
                         const char* history_path, ms_train_summary* summary) {
  MS_REQUIRE(model && train_data && val_data, "ms_model_train: null argument");
  return guarded([&] {
    const auto config = train::train_config_from_json(text_or_empty(config_json));
    const auto train_set = train::PreparedDataset::from_records(train_data->records);
    const auto val_set = train::PreparedDataset::from_records(val_data->records);
    auto result = train::train(model->model, train_set, val_set, config);
    if (history_path && *history_path) train::save_history(history_path, result.history);
    model->model = std::move(result.model);
    if (summary) {
      summary->epochs_run = result.history.size();
      summary->best_epoch = result.best_epoch;
      summary->best_val_loss = result.best_val_loss;
      summary->early_stopped = result.early_stopped ? 1 : 0;
    }
    return MS_OK;
  });
}

ms_status ms_model_predict(const ms_model* model, const ms_dataset* dataset, double* out, size_t capacity) {
  MS_REQUIRE(model && dataset && (out || dataset->records.empty()), "ms_model_predict: null argument");
  MS_REQUIRE(capacity >= dataset->records.size(), "ms_model_predict: output buffer too small");
  return guarded([&] {
    const auto preds = train::predict_dataset(model->model, train::PreparedDataset::from_records(dataset->records));
    std::copy(preds.begin(), preds.end(), out);
    return MS_OK;
  });
}

ms_status ms_model_evaluate(const ms_model* model, const ms_dataset* dataset, ms_metrics* out) {
  MS_REQUIRE(model && dataset && out, "ms_model_evaluate: null argument");
  return guarded([&] {
    const auto report = train::evaluate(model->model, train::PreparedDataset::from_records(dataset->records));
    *out = {report.pearson_rp, report.spearman_rs, report.mse, report.n};
    return MS_OK;
  });
}

ms_status ms_model_export_representations(const ms_model* model, const ms_dataset* dataset, const char* out_csv) {
  MS_REQUIRE(model && dataset && out_csv, "ms_model_export_representations: null argument");
  return guarded([&] {
    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw DataError(std::string("cannot write '") + out_csv + "'");
    screening::write_representations(out, model->model, dataset->records);
    return MS_OK;
  });
}

ms_status ms_screen(const ms_model* model, const char* solvents_path, const char* salts_path, const char* out_csv,
                    size_t threads, int use_cache, ms_screen_summary* summary) {
  MS_REQUIRE(model && solvents_path && salts_path && out_csv, "ms_screen: null argument");
  return guarded([&] {
    const auto solvents = screening::read_smiles_list(solvents_path);
    const auto salts = screening::read_smiles_list(salts_path);
    const auto candidates = screening::enumerate_binary_candidates(solvents, salts);
    screening::ScreeningOptions options;
    options.threads = threads == 0 ? 1 : threads;
    options.use_cache = use_cache != 0;
    const auto report = screening::run_screening(model->model, candidates, options);
    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw DataError(std::string("cannot write '") + out_csv + "'");
    screening::write_screening_csv(out, report.results);
    if (!out) throw DataError(std::string("failed writing '") + out_csv + "'");
    if (summary) *summary = {report.num_candidates, report.results.size(), report.skipped.size()};
    if (report.partial()) {
      return fail(MS_PARTIAL, std::to_string(report.skipped.size()) + " of " +
                                  std::to_string(report.num_candidates) + " candidates skipped; first: " +
                                  report.skipped.front());
    }
    return MS_OK;
  });
}

ms_status ms_permutation_test(const ms_model* model, const ms_dataset* dataset, uint64_t seed,
                              ms_permutation_report* out) {
  MS_REQUIRE(model && dataset && out, "ms_permutation_test: null argument");
  return guarded([&] {
    const auto r = screening::permutation_test(model->model, dataset->records, seed);
    *out = {r.num_tested, r.num_skipped, r.max_abs_diff, r.mean_abs_diff, r.fraction_changed};
    return MS_OK;
  });
}

}  // extern "C"
