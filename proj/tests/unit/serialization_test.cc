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

#include <filesystem>

#include <gtest/gtest.h>

#include "uend/error.h"
#include "uend/serialization.h"

namespace uend {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "uend_serialization_test";
  fs::create_directories(dir);
  return dir;
}

ModelParams sample_params(std::uint64_t seed) {
  Architecture arch;
  arch.input_dim = 5;
  arch.hidden = {7};
  arch.embedding_dim = 4;
  arch.n_classes = 3;
  arch.hidden_activation = Activation::kTanh;
  Rng rng(seed);
  ModelParams p = init_params(arch, rng);
  p.classifier.bias << 0.1, -1.0 / 3.0, 1e-300;
  return p;
}

void expect_same(const ModelParams& a, const ModelParams& b) {
  const auto x = tensors(a);
  const auto y = tensors(b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t k = 0; k < x.size(); ++k) EXPECT_TRUE(x[k] == y[k]) << "tensor " << k;
  for (std::size_t l = 0; l < a.encoder.size(); ++l) {
    EXPECT_EQ(a.encoder[l].activation, b.encoder[l].activation);
  }
}

TEST(Checkpoint, RoundTripIsExact) {
  Checkpoint c;
  c.params = sample_params(1);
  c.epoch = 17;
  const Checkpoint back = checkpoint_from_json(checkpoint_to_json(c));
  EXPECT_EQ(back.epoch, 17);
  EXPECT_FALSE(back.optimizer.has_value());
  expect_same(c.params, back.params);
}

TEST(Checkpoint, OptimizerStateRoundTrips) {
  Checkpoint c;
  c.params = sample_params(2);
  OptimizerState s = make_optimizer(OptimizerKind::kAdam, 3e-4, 1e-2, c.params);
  ModelParams grad = sample_params(3);
  optimizer_step(c.params, grad, s);
  optimizer_step(c.params, grad, s);
  c.optimizer = s;
  const fs::path path = temp_dir() / "ckpt.json";
  save_checkpoint(path, c);
  const Checkpoint back = load_checkpoint(path);
  ASSERT_TRUE(back.optimizer.has_value());
  EXPECT_EQ(back.optimizer->step, 2);
  EXPECT_EQ(back.optimizer->learning_rate, 3e-4);
  expect_same(s.first_moment, back.optimizer->first_moment);
  expect_same(s.second_moment, back.optimizer->second_moment);

  // Continuing from the restored state matches continuing in memory.
  ModelParams p1 = c.params, p2 = back.params;
  OptimizerState s2 = *back.optimizer;
  optimizer_step(p1, grad, s);
  optimizer_step(p2, grad, s2);
  expect_same(p1, p2);
}

TEST(Checkpoint, RejectsWrongFormatAndVersion) {
  EXPECT_THROW(checkpoint_from_json(R"({"format":"other","version":1})"), FormatError);
  EXPECT_THROW(checkpoint_from_json(R"({"format":"uend-checkpoint","version":99})"), FormatError);
  EXPECT_THROW(checkpoint_from_json(R"({"format":"uend-checkpoint","version":1})"), FormatError);
  EXPECT_THROW(checkpoint_from_json("{not json"), FormatError);
  EXPECT_THROW(load_checkpoint(temp_dir() / "missing.json"), FormatError);
}

TEST(Checkpoint, RejectsShapesThatDoNotCompose) {
  Checkpoint c;
  c.params = sample_params(4);
  c.params.classifier.weight = Matrix::Zero(3, 9);
  EXPECT_THROW(checkpoint_from_json(checkpoint_to_json(c)), ParameterError);
}

TEST(Predictor, RoundTripPredictsIdentically) {
  Rng rng(5);
  std::normal_distribution<double> g;
  Matrix z(120, 6);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = g(rng) + (i % 3 == j ? 4.0 : 0.0);
  }
  BiasPredictor p;
  p.pca = fit_pca(z);
  p.clusters = kmeans_fit(p.pca.project(z), 3, 1);
  const fs::path path = temp_dir() / "predictor.json";
  save_predictor(path, p);
  const BiasPredictor back = load_predictor(path);
  EXPECT_EQ(back.k(), 3);
  EXPECT_TRUE(back.pca.components == p.pca.components);
  EXPECT_TRUE(back.clusters.centroids == p.clusters.centroids);
  EXPECT_EQ(predict_bias(back, z), predict_bias(p, z));
}

TEST(Predictor, RejectsMismatchedDimensions) {
  BiasPredictor p;
  p.pca.mean = Vector::Zero(3);
  p.pca.components = Matrix::Identity(2, 3);
  p.clusters.centroids = Matrix::Zero(2, 5);
  EXPECT_THROW(predictor_from_json(predictor_to_json(p)), FormatError);
  EXPECT_THROW(predictor_from_json(R"({"format":"uend-checkpoint","version":1})"), FormatError);
}

TEST(PseudoLabels, CsvLayout) {
  const fs::path path = temp_dir() / "labels.csv";
  const std::vector<int> labels{2, 0, 1};
  write_pseudo_labels_csv(path, labels);
  EXPECT_EQ(read_text_file(path), "index,pseudo_label\n0,2\n1,0\n2,1\n");
}

TEST(BiasnessReportJson, CarriesAllFields) {
  BiasnessReport r;
  r.rho = 0.9;
  r.phi_global = 0.5;
  r.nmi_by = 0.25;
  r.nmi_perfect = 0.75;
  r.phi_cells = Matrix::Constant(2, 2, 0.5);
  r.warnings = {"w"};
  const std::string text = biasness_report_to_json(r);
  for (const char* key : {"\"rho\"", "\"eps\"", "\"phi_global\"", "\"nmi_by\"", "\"nmi_perfect\"",
                          "\"phi_cells\"", "\"warnings\""}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
}

TEST(TextFiles, UnwritablePathIsAParameterError) {
  EXPECT_THROW(write_text_file(temp_dir() / "no_such_dir" / "x.txt", "x"), ParameterError);
}

}  // namespace
}  // namespace uend
