// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "../common/screening_lists.hpp"
#include "doctest.h"
#include "molsets/molsets.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("molsets_capi_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << "\n";
}

}  // namespace

TEST_CASE("status names and null arguments") {
  ms_set_log_level(MS_LOG_OFF);
  CHECK(std::string(ms_status_name(MS_OK)) == "ok");
  CHECK(std::string(ms_status_name(MS_PARTIAL)) == "partial success");
  CHECK(ms_featurize(nullptr, nullptr) == MS_ERR_USAGE);
  CHECK(ms_dataset_size(nullptr) == 0);
  ms_model* model = nullptr;
  CHECK(ms_model_create(nullptr, "transformer", "gcnconv", &model) == MS_ERR_USAGE);
  CHECK(std::string(ms_last_error()).find("transformer") != std::string::npos);
  CHECK(ms_model_create(nullptr, "molsets", "chebconv", &model) == MS_ERR_USAGE);
  CHECK(ms_model_create("{\"hidden_dim\": 0}", "molsets", "gcnconv", &model) == MS_ERR_USAGE);
  CHECK(ms_model_create("{oops", "molsets", "gcnconv", &model) == MS_ERR_DATA);
  CHECK(model == nullptr);
}

TEST_CASE("dataset and model files round trip") {
  TempDir dir;
  ms_dataset* data = nullptr;
  REQUIRE(ms_dataset_synthesize(30, 4, 0.05, &data) == MS_OK);
  REQUIRE(ms_dataset_save(data, dir.file("d.csv").c_str()) == MS_OK);
  ms_dataset* loaded = nullptr;
  std::size_t skipped = 99;
  REQUIRE(ms_dataset_load(dir.file("d.csv").c_str(), 0, &loaded, &skipped) == MS_OK);
  CHECK(skipped == 0);
  CHECK(ms_dataset_size(loaded) == 30);
  CHECK(ms_dataset_load(dir.file("missing.csv").c_str(), 0, &loaded, nullptr) == MS_ERR_DATA);

  ms_dataset *tr = nullptr, *va = nullptr, *te = nullptr;
  const double ratios[3] = {3, 1, 1};
  REQUIRE(ms_dataset_split(loaded, ratios, 7, &tr, &va, &te) == MS_OK);
  CHECK(ms_dataset_size(tr) == 18);
  CHECK(ms_dataset_size(va) == 6);
  CHECK(ms_dataset_size(te) == 6);

  ms_model* model = nullptr;
  REQUIRE(ms_model_create("{\"seed\": 3}", "molsets", "sageconv", &model) == MS_OK);
  ms_train_summary summary{};
  REQUIRE(ms_model_train(model, tr, va, "{\"max_epochs\": 4, \"batch_size\": 8}", dir.file("h.csv").c_str(),
                         &summary) == MS_OK);
  CHECK(summary.epochs_run == 4);
  CHECK(summary.best_epoch >= 1);
  CHECK(slurp(dir.file("h.csv")).rfind("epoch,train_loss,val_loss,lr\n", 0) == 0);

  ms_metrics metrics{};
  REQUIRE(ms_model_evaluate(model, te, &metrics) == MS_OK);
  CHECK(metrics.n == 6);

  REQUIRE(ms_model_save(model, dir.file("m.json").c_str()) == MS_OK);
  ms_model* back = nullptr;
  REQUIRE(ms_model_load(dir.file("m.json").c_str(), &back) == MS_OK);
  std::vector<double> a(30), b(30);
  REQUIRE(ms_model_predict(model, loaded, a.data(), a.size()) == MS_OK);
  REQUIRE(ms_model_predict(back, loaded, b.data(), b.size()) == MS_OK);
  CHECK(a == b);

  char* config = nullptr;
  REQUIRE(ms_model_config_json(back, &config) == MS_OK);
  CHECK(std::string(config).find("sageconv") != std::string::npos);
  ms_string_free(config);

  ms_permutation_report perm{};
  REQUIRE(ms_permutation_test(back, loaded, 1, &perm) == MS_OK);
  CHECK(perm.max_abs_diff <= 1e-9);

  REQUIRE(ms_model_export_representations(back, te, dir.file("z.csv").c_str()) == MS_OK);
  CHECK(slurp(dir.file("z.csv")).rfind("mixture_id,z_0", 0) == 0);

  {
    std::ofstream out(dir.file("bad.json"));
    out << "{\"feature_schema_version\": 1}";
  }
  CHECK(ms_model_load(dir.file("bad.json").c_str(), &back) != MS_OK);

  for (ms_dataset* d : {data, loaded, tr, va, te}) ms_dataset_free(d);
  ms_model_free(model);
  ms_model_free(back);
}

TEST_CASE("training failures map to status codes") {
  ms_dataset* data = nullptr;
  REQUIRE(ms_dataset_synthesize(10, 1, 0.0, &data) == MS_OK);
  ms_model* model = nullptr;
  REQUIRE(ms_model_create(nullptr, "wsum", "graphconv", &model) == MS_OK);
  CHECK(ms_model_train(model, data, data, "{\"lr\": -1}", nullptr, nullptr) == MS_ERR_USAGE);
  CHECK(ms_model_train(model, data, data, "{\"lr\": 1e300, \"max_epochs\": 3}", nullptr, nullptr) ==
        MS_ERR_NUMERIC);
  ms_model_free(model);
  ms_dataset_free(data);
}

TEST_CASE("screening through the C interface") {
  TempDir dir;
  ms_model* model = nullptr;
  REQUIRE(ms_model_create(nullptr, "molsets", "graphconv", &model) == MS_OK);
  auto solvents = molsets::testing::screening_solvents();
  solvents.resize(6);
  auto salts = molsets::testing::screening_salts();
  salts.resize(2);
  write_lines(dir.file("solv.txt"), solvents);
  write_lines(dir.file("salt.txt"), salts);
  ms_screen_summary summary{};
  REQUIRE(ms_screen(model, dir.file("solv.txt").c_str(), dir.file("salt.txt").c_str(), dir.file("a.csv").c_str(), 2,
                    1, &summary) == MS_OK);
  CHECK(summary.num_candidates == 30);
  CHECK(summary.num_scored == 30);
  REQUIRE(ms_screen(model, dir.file("solv.txt").c_str(), dir.file("salt.txt").c_str(), dir.file("b.csv").c_str(), 1,
                    0, nullptr) == MS_OK);
  CHECK(slurp(dir.file("a.csv")) == slurp(dir.file("b.csv")));

  solvents.push_back("C1CC");
  write_lines(dir.file("solv.txt"), solvents);
  CHECK(ms_screen(model, dir.file("solv.txt").c_str(), dir.file("salt.txt").c_str(), dir.file("c.csv").c_str(), 1, 1,
                  &summary) == MS_PARTIAL);
  CHECK(summary.num_skipped == 12);
  CHECK(fs::exists(dir.file("c.csv")));

  write_lines(dir.file("dup.txt"), {"CCO", "CCO"});
  CHECK(ms_screen(model, dir.file("dup.txt").c_str(), dir.file("salt.txt").c_str(), dir.file("d.csv").c_str(), 1, 1,
                  nullptr) == MS_ERR_DATA);
  ms_model_free(model);
}
