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

#ifndef UEND_PIPELINE_H_
#define UEND_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "uend/bias_predictor.h"
#include "uend/biasness.h"
#include "uend/data.h"
#include "uend/end_reg.h"
#include "uend/model.h"

namespace uend {

struct TrainConfig {
  int epochs = 40;
  int batch_size = 256;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  std::vector<int> snapshot_epochs;  // each in [1, epochs]
  std::vector<int> hidden = {64, 64};
  int embedding_dim = 32;
  Activation hidden_activation = Activation::kRelu;
  Activation embedding_activation = Activation::kIdentity;
  EndWeights weights;  // used by train_debiased when no search is run
  int search_budget = 24;
  double search_low = 1e-2;
  double search_high = 50.0;
  int search_threads = 1;
  double train_rho = 0.0;  // metadata

  void validate() const;
  Architecture architecture(int input_dim, int n_classes) const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;     // mean cross-entropy over the epoch's batches
  double train_penalty = 0.0;  // mean EnD penalty, 0 for vanilla training
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  std::optional<double> test_accuracy;
  std::optional<double> bias_accuracy;  // permutation accuracy vs ground truth
};

struct RunReport {
  std::vector<EpochRecord> epochs;
  std::map<int, double> phi_by_snapshot;
  EndWeights chosen;
  double val_accuracy = 0.0;
  std::optional<double> test_accuracy;
};

// Optional monitoring set (typically the unbiased test split). Its ground
// truth bias labels, when present, feed the per-epoch bias accuracy; they
// never reach the optimizer.
struct Monitor {
  const Dataset* test = nullptr;
};

struct VanillaResult {
  ModelParams params;
  std::map<int, ModelParams> snapshots;  // by epoch; 0 is the initialization
  RunReport report;
};

// Plain cross-entropy training of encoder + classifier.
VanillaResult train_vanilla(const TrainConfig& config, const Dataset& train,
                            const Dataset& val, const Monitor& monitor = {});

struct PredictorResult {
  BiasPredictor predictor;
  PseudoLabeled train;
  KSelection selection;
};

// PCA and KMeans on validation embeddings, then nearest-centroid labels for
// the training set. `forced_k` skips the silhouette search.
PredictorResult fit_bias_predictor(const ModelParams& encoder_snapshot, const Dataset& train,
                                   const Dataset& val, std::uint64_t seed,
                                   std::optional<int> forced_k = std::nullopt);

struct DebiasedResult {
  ModelParams params;
  RunReport report;
};

// Cross-entropy plus the EnD penalty on the bias field of `train` (pseudo-
// labels). Starts from a fresh initialization drawn from config.seed.
DebiasedResult train_debiased(const TrainConfig& config, const Dataset& train,
                              const Dataset& val, const EndWeights& weights,
                              const Monitor& monitor = {});

struct Trial {
  int index = 0;
  EndWeights weights;
  double val_accuracy = 0.0;
  std::optional<double> test_accuracy;
};

struct SearchResult {
  EndWeights best;
  std::vector<Trial> trials;  // in candidate order
  DebiasedResult best_run;
};

// (0,0) followed by budget-1 candidates with alpha and beta log-uniform in
// [low, high]; the winner maximizes validation accuracy, ties to smaller
// alpha + beta. `candidates`, when given, replaces the random draw.
SearchResult search_hyperparams(const TrainConfig& config, const Dataset& train,
                                const Dataset& val, int budget, std::pair<double, double> interval,
                                Rng& rng, const Monitor& monitor = {},
                                std::optional<std::vector<EndWeights>> candidates = std::nullopt);

// Maximum over label bijections of the matching fraction (optimal
// assignment on the confusion matrix).
double bias_pseudo_accuracy(std::span<const int> predictions, std::span<const int> truth,
                            int n_classes);

// Column assignment maximizing the total weight of a square matrix.
std::vector<int> max_weight_assignment(const Matrix& weights);

struct CurvePoint {
  int epoch = 0;
  double phi = 0.0;
  BiasnessReport report;
};

// For every snapshot: predict on eval_set, estimate phi (eps = 0) against its
// ground-truth bias labels at correlation `rho`.
std::vector<CurvePoint> biasness_curve(const std::map<int, ModelParams>& snapshots,
                                       const Dataset& eval_set, double rho);

struct Evaluation {
  double accuracy = 0.0;
  std::vector<double> per_class;  // NaN for classes absent from the set
};

std::vector<int> predict(const ModelParams& params, const Matrix& features);
Evaluation evaluate(const ModelParams& params, const Dataset& data);

}  // namespace uend

#endif  // UEND_PIPELINE_H_
