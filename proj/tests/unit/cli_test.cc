// Copyright 2026 The uend Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "commands.h"
#include "experiment_config.h"
#include "uend/serialization.h"

namespace uend::tools {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "uend_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kSmallConfig = R"({
  "data": {"rho": 0.99, "n_train": 300, "n_val": 120, "n_test": 200},
  "model": {"hidden": [16], "embedding_dim": 8},
  "training": {"epochs": 2, "batch_size": 64, "repeats": 1},
  "search": {"budget": 2}
})";

std::string field_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

int run_cli(const std::string& args, const fs::path& stderr_path) {
  const std::string cmd = std::string(UEND_CLI_PATH) + " " + args + " >/dev/null 2>" + stderr_path.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Config, DefaultsRoundTrip) {
  const ExperimentConfig c = parse_config("{}");
  EXPECT_EQ(c.training.epochs, 40);
  EXPECT_EQ(c.repeats, 3);
  EXPECT_EQ(c.snapshot_epochs(), (std::vector<int>{5, 40}));
  EXPECT_EQ(config_to_json(parse_config(config_to_json(c))), config_to_json(c));
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(field_of(R"({"data": {"rho": 0}})"), "data.rho");
  EXPECT_EQ(field_of(R"({"data": {"rho": 1.5}})"), "data.rho");
  EXPECT_EQ(field_of(R"({"data": {"colour": 1}})"), "data.colour");
  EXPECT_EQ(field_of(R"({"training": {"epochs": "ten"}})"), "training.epochs");
  EXPECT_EQ(field_of(R"({"search": {"interval": [5, 1]}})"), "search.interval");
  EXPECT_EQ(field_of(R"({"extra": {}})"), "extra");
  EXPECT_NO_THROW(parse_config(R"({"data": {"rho": 1.0}})"));
}

TEST(Config, UnreadableFile) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Phase, Parsing) {
  EXPECT_EQ(parse_phase("1"), Phase::kSnapshots);
  EXPECT_EQ(parse_phase("3"), Phase::kAll);
  EXPECT_EQ(parse_phase("all"), Phase::kAll);
  EXPECT_THROW(parse_phase("4"), ConfigError);
}

TEST(Biasness, PredictionEqualToBiasIsFullyBiased) {
  std::stringstream in;
  in << "target,bias,prediction\n";
  for (int i = 0; i < 1000; ++i) in << i % 10 << ',' << i % 10 << ',' << i % 10 << '\n';
  const json report = json::parse(cmd_biasness(read_label_pairs(in), 0.1, std::nullopt));
  EXPECT_NEAR(report.at("phi_global").get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(report.at("nmi_by").get<double>(), 1.0, 1e-9);
}

TEST(Biasness, HalfwayMixture) {
  // Prediction equals the bias half of the time, else uniform: phi ~ 0.5.
  Rng rng(1);
  std::uniform_int_distribution<int> label(0, 9);
  std::bernoulli_distribution copy(0.5);
  std::stringstream in;
  in << "bias,prediction\n";
  for (int i = 0; i < 200'000; ++i) {
    const int b = label(rng);
    in << b << ',' << (copy(rng) ? b : label(rng)) << '\n';
  }
  const json report = json::parse(cmd_biasness(read_label_pairs(in), 0.1, 10));
  EXPECT_NEAR(report.at("phi_global").get<double>(), 0.5, 0.05);
}

TEST(Biasness, InputErrors) {
  std::stringstream empty("bias,prediction\n");
  EXPECT_THROW(cmd_biasness(read_label_pairs(empty), 0.5, std::nullopt), ParameterError);
  std::stringstream missing("bias,target\n1,2\n");
  EXPECT_THROW(read_label_pairs(missing), ParameterError);
  std::stringstream bad("bias,prediction\n1,2\n3,x\n");
  try {
    read_label_pairs(bad);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Curves, KnownRows) {
  const std::string csv = cmd_curves({0.1, 0.999}, 10, 0.5);
  std::stringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "rho,phi,nmi_perfect,nmi_by");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::vector<double> row;
    for (std::string cell; std::getline(ls, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  ASSERT_EQ(rows.size(), 6u);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(rows[static_cast<std::size_t>(i)][2], 0.0, 1e-12);
  EXPECT_NEAR(rows[3][2], 0.9957, 1e-4);
  // phi = 0: predictions are independent of the bias given the target, so the
  // mutual information is inherited from the target alone.
  EXPECT_NEAR(rows[3][3], rows[3][2], 1e-9);
  EXPECT_NEAR(rows[5][3], 1.0, 1e-9);
  EXPECT_EQ(default_rho_grid(10).front(), 0.1);
  EXPECT_EQ(default_rho_grid(10).back(), 0.999);
}

TEST(Pipeline, PhaseOneLayoutAndReproducibleManifest) {
  const ExperimentConfig c = parse_config(kSmallConfig);
  std::ostringstream log;
  Options o;
  o.phase = Phase::kSnapshots;
  o.quiet = true;
  const fs::path a = scratch("phase1_a");
  const fs::path b = scratch("phase1_b");
  cmd_pipeline(c, a, o, log);
  cmd_pipeline(c, b, o, log);
  EXPECT_TRUE(fs::exists(a / "config.json"));
  EXPECT_TRUE(fs::exists(a / "checkpoints" / "vanilla_seed0_epoch2.json"));
  EXPECT_TRUE(fs::exists(a / "reports" / "biasness_seed0.csv"));
  EXPECT_FALSE(fs::exists(a / "checkpoints" / "predictor_seed0_T2.json"));
  const json ma = json::parse(read_text_file(a / "manifest.json"));
  const json mb = json::parse(read_text_file(b / "manifest.json"));
  EXPECT_EQ(ma.at("format"), "uend-run-manifest");
  // Only config.json differs: it records the output directory.
  ASSERT_EQ(ma.at("files").size(), mb.at("files").size());
  for (std::size_t i = 0; i < ma.at("files").size(); ++i) {
    if (ma["files"][i].at("path") == "config.json") continue;
    EXPECT_EQ(ma["files"][i], mb["files"][i]);
  }
  for (const json& f : ma.at("files")) {
    const std::string bytes = read_text_file(a / f.at("path").get<std::string>());
    EXPECT_EQ(f.at("fnv1a64").get<std::string>(), fnv1a_hex(bytes));
  }
}

TEST(Pipeline, FullRunWritesEveryArtifact) {
  const ExperimentConfig c = parse_config(kSmallConfig);
  std::ostringstream log;
  Options o;
  o.quiet = true;
  const fs::path dir = scratch("full");
  cmd_pipeline(c, dir, o, log);
  for (const char* rel : {"checkpoints/predictor_seed0_T2.json", "checkpoints/debiased_seed0_T2.json",
                          "reports/pseudo_labels_seed0_T2.csv", "reports/trials_seed0_T2.csv",
                          "reports/summary.json"}) {
    EXPECT_TRUE(fs::exists(dir / rel)) << rel;
  }
  EXPECT_NO_THROW(load_predictor(dir / "checkpoints/predictor_seed0_T2.json"));
  EXPECT_NO_THROW(load_checkpoint(dir / "checkpoints/debiased_seed0_T2.json"));
}

TEST(Fnv, KnownVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Binary, ExitCodes) {
  const fs::path dir = scratch("binary");
  const fs::path err = dir / "stderr.txt";
  EXPECT_EQ(run_cli("curves --rho-grid 0.5", err), 0);
  EXPECT_EQ(run_cli("no-such-command", err), 2);
  EXPECT_EQ(json::parse(read_text_file(err)).at("error"), "usage");

  {
    std::ofstream(dir / "bad.json") << R"({"data": {"rho": 2}})";
  }
  EXPECT_EQ(run_cli("generate --config " + (dir / "bad.json").string() + " --out " + dir.string(), err), 2);
  const json config_error = json::parse(read_text_file(err));
  EXPECT_EQ(config_error.at("error"), "config");
  EXPECT_EQ(config_error.at("field"), "data.rho");

  {
    std::ofstream(dir / "idx.json") << R"({"data": {"source": "idx", "idx": {
      "train_images": "/nonexistent/train-images", "train_labels": "/nonexistent/train-labels",
      "test_images": "/nonexistent/test-images", "test_labels": "/nonexistent/test-labels"}}})";
  }
  EXPECT_EQ(run_cli("generate --config " + (dir / "idx.json").string() + " --out " + dir.string(), err), 3);
  const json format_error = json::parse(read_text_file(err));
  EXPECT_EQ(format_error.at("error"), "format");
  EXPECT_NE(format_error.at("message").get<std::string>().find("/nonexistent/train-images"),
            std::string::npos);

  {
    std::ofstream(dir / "labels.csv") << "bias,prediction\n0,0\n1,oops\n";
  }
  EXPECT_EQ(run_cli("biasness --rho 0.5 --input " + (dir / "labels.csv").string(), err), 3);
}

TEST(Binary, GenerateIsDeterministic) {
  const fs::path dir = scratch("generate");
  {
    std::ofstream(dir / "c.json") << kSmallConfig;
  }
  const fs::path err = dir / "stderr.txt";
  ASSERT_EQ(run_cli("generate --quiet --config " + (dir / "c.json").string() + " --out " + (dir / "a").string(), err), 0);
  ASSERT_EQ(run_cli("generate --quiet --config " + (dir / "c.json").string() + " --out " + (dir / "b").string(), err), 0);
  for (const char* name : {"train.csv", "val.csv", "test.csv"}) {
    EXPECT_EQ(read_text_file(dir / "a" / "data" / name), read_text_file(dir / "b" / "data" / name)) << name;
  }
  const Dataset train = read_dataset_csv(dir / "a" / "data" / "train.csv");
  EXPECT_EQ(train.size(), 300u);
  EXPECT_EQ(train.dim(), 20);
}

}  // namespace
}  // namespace uend::tools
