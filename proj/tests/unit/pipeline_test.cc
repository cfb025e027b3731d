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

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "uend/error.h"
#include "uend/pipeline.h"

namespace uend {
namespace {

// Oracle: best permutation by exhaustive enumeration.
double brute_force_accuracy(const std::vector<int>& pred, const std::vector<int>& truth, int n) {
  Matrix confusion = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < pred.size(); ++i) confusion(pred[i], truth[i]) += 1.0;
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double hits = 0.0;
    for (int r = 0; r < n; ++r) hits += confusion(r, perm[static_cast<std::size_t>(r)]);
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(pred.size());
}

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

Splits small_splits(double rho, std::uint64_t seed, std::size_t n = 600) {
  BiasSpec spec;
  spec.rho = rho;
  Rng rng(seed);
  const Dataset pool = generate_synthetic(spec, n, rng);
  Split split = make_validation_split(pool, 0.3, std::nullopt, synthetic_rebias(spec, pool), rng);
  BiasSpec test_spec = spec;
  test_spec.rho = 0.1;
  return {std::move(split.train), std::move(split.val), generate_synthetic(test_spec, 300, rng)};
}

TrainConfig quick_config(int epochs = 3) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 64;
  c.hidden = {16};
  c.embedding_dim = 8;
  c.seed = 5;
  return c;
}

void expect_same_params(const ModelParams& a, const ModelParams& b) {
  const auto x = tensors(a);
  const auto y = tensors(b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t k = 0; k < x.size(); ++k) EXPECT_TRUE(x[k] == y[k]) << "tensor " << k;
}

TEST(Assignment, MatchesBruteForce) {
  for (int n = 3; n <= 7; ++n) {
    for (int trial = 0; trial < 15; ++trial) {
      Rng rng(static_cast<std::uint64_t>(n * 100 + trial));
      std::uniform_int_distribution<int> label(0, n - 1);
      std::vector<int> pred(200), truth(200);
      for (std::size_t i = 0; i < 200; ++i) {
        truth[i] = label(rng);
        pred[i] = trial % 2 ? (truth[i] + 1) % n : label(rng);
        if (i % 7 == 0) pred[i] = label(rng);
      }
      EXPECT_NEAR(bias_pseudo_accuracy(pred, truth, n), brute_force_accuracy(pred, truth, n), 1e-15);
    }
  }
}

TEST(Assignment, RectangularAndEdgeCases) {
  EXPECT_TRUE(max_weight_assignment(Matrix::Zero(0, 0)).empty());
  Matrix w(3, 3);
  w << 1, 9, 1, 9, 1, 1, 1, 1, 9;
  EXPECT_EQ(max_weight_assignment(w), (std::vector<int>{1, 0, 2}));
  EXPECT_THROW(max_weight_assignment(Matrix::Zero(2, 3)), ParameterError);
}

TEST(PseudoAccuracy, PermutedLabelsScoreOne) {
  std::vector<int> truth, pred;
  for (int i = 0; i < 100; ++i) {
    truth.push_back(i % 5);
    pred.push_back((i % 5 + 3) % 5);
  }
  EXPECT_DOUBLE_EQ(bias_pseudo_accuracy(pred, truth, 5), 1.0);
}

TEST(PseudoAccuracy, IdentityIsOptimalForAccuratePredictions) {
  Rng rng(1);
  std::uniform_int_distribution<int> label(0, 5);
  std::bernoulli_distribution flip(0.2);
  std::vector<int> truth(500), pred(500);
  int hits = 0;
  for (std::size_t i = 0; i < 500; ++i) {
    truth[i] = label(rng);
    pred[i] = flip(rng) ? label(rng) : truth[i];
    hits += pred[i] == truth[i];
  }
  EXPECT_DOUBLE_EQ(bias_pseudo_accuracy(pred, truth, 6), hits / 500.0);
}

TEST(PseudoAccuracy, RandomPredictionsAreSlightlyInflated) {
  Rng rng(2);
  std::uniform_int_distribution<int> label(0, 9);
  std::vector<int> truth(10'000), pred(10'000);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = label(rng);
    pred[i] = label(rng);
  }
  const double acc = bias_pseudo_accuracy(pred, truth, 10);
  EXPECT_GE(acc, 0.1 - 0.01);
  EXPECT_LT(acc, 0.13);
  EXPECT_DOUBLE_EQ(acc, brute_force_accuracy(pred, truth, 10));
}

TEST(PseudoAccuracy, RejectsOutOfRangeLabels) {
  EXPECT_THROW(bias_pseudo_accuracy(std::vector<int>{0, 3}, std::vector<int>{0, 1}, 3), ParameterError);
  EXPECT_THROW(bias_pseudo_accuracy(std::vector<int>{0}, std::vector<int>{0, 1}, 3), ParameterError);
}

TEST(Evaluate, MemorizingAndConstantModels) {
  Dataset d;
  d.n_targets = 4;
  d.features = Matrix::Identity(8, 4);
  d.features.bottomRows(4) = Matrix::Identity(4, 4);
  d.targets = {0, 1, 2, 3, 0, 1, 2, 3};
  ModelParams memorize;
  memorize.encoder.push_back({Matrix::Identity(4, 4), Vector::Zero(4), Activation::kIdentity});
  memorize.classifier = {Matrix::Identity(4, 4), Vector::Zero(4), Activation::kIdentity};
  const Evaluation e = evaluate(memorize, d);
  EXPECT_DOUBLE_EQ(e.accuracy, 1.0);
  for (double v : e.per_class) EXPECT_DOUBLE_EQ(v, 1.0);

  ModelParams constant = memorize;
  constant.classifier.weight.setZero();
  constant.classifier.bias << 0, 0, 5, 0;
  EXPECT_DOUBLE_EQ(evaluate(constant, d).accuracy, 0.25);
  EXPECT_THROW(evaluate(constant, Dataset{}), ParameterError);
}

TEST(Evaluate, RandomModelIsNearChance) {
  Rng rng(3);
  BiasSpec spec;
  spec.rho = 0.1;
  const Dataset d = generate_synthetic(spec, 5000, rng);
  double total = 0.0;
  for (int s = 0; s < 10; ++s) {
    Rng init(100 + s);
    total += evaluate(init_params(quick_config().architecture(d.dim(), 10), init), d).accuracy;
  }
  EXPECT_NEAR(total / 10, 0.1, 0.06);
}

TEST(TrainVanilla, ZeroEpochsReturnsTheInitialization) {
  const Splits s = small_splits(0.9, 1);
  TrainConfig c = quick_config(0);
  const VanillaResult r = train_vanilla(c, s.train, s.val);
  Rng rng(c.seed);
  expect_same_params(r.params, init_params(c.architecture(s.train.dim(), 10), rng));
  EXPECT_TRUE(r.report.epochs.empty());
}

TEST(TrainVanilla, DeterministicWithSnapshotsAndReport) {
  const Splits s = small_splits(0.99, 2);
  TrainConfig c = quick_config(4);
  c.snapshot_epochs = {1, 3};
  const Monitor m{&s.test};
  const VanillaResult a = train_vanilla(c, s.train, s.val, m);
  const VanillaResult b = train_vanilla(c, s.train, s.val, m);
  expect_same_params(a.params, b.params);
  ASSERT_EQ(a.snapshots.size(), 2u);
  EXPECT_TRUE(a.snapshots.count(1) && a.snapshots.count(3));
  ASSERT_EQ(a.report.epochs.size(), 4u);
  for (const EpochRecord& r : a.report.epochs) {
    EXPECT_TRUE(r.test_accuracy.has_value());
    EXPECT_TRUE(r.bias_accuracy.has_value());
    EXPECT_TRUE(std::isfinite(r.train_loss));
    EXPECT_EQ(r.train_penalty, 0.0);
  }
  EXPECT_EQ(a.report.phi_by_snapshot.size(), 2u);
  for (const auto& [epoch, phi] : a.report.phi_by_snapshot) {
    EXPECT_GE(phi, 0.0);
    EXPECT_LE(phi, 1.0);
  }
}

TEST(TrainVanilla, DivergenceIsARunError) {
  Splits s = small_splits(0.9, 3);
  s.train.features(0, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig c = quick_config(2);
  c.batch_size = 1000;
  try {
    train_vanilla(c, s.train, s.val);
    FAIL() << "expected a run error";
  } catch (const RunError& e) {
    EXPECT_EQ(e.epoch(), 1);
  }
}

TEST(TrainVanilla, BenignDataIsLearned) {
  const Splits s = small_splits(0.1, 4, 3000);
  TrainConfig c = quick_config(25);
  c.hidden = {64, 64};
  c.embedding_dim = 32;
  const Monitor m{&s.test};
  EXPECT_GE(*train_vanilla(c, s.train, s.val, m).report.test_accuracy, 0.9);
}

TEST(TrainDebiased, ZeroWeightsReproduceVanillaExactly) {
  const Splits s = small_splits(0.99, 5);
  const TrainConfig c = quick_config(3);
  const VanillaResult v = train_vanilla(c, s.train, s.val);
  const DebiasedResult d = train_debiased(c, s.train, s.val, {0.0, 0.0});
  expect_same_params(v.params, d.params);
}

TEST(TrainDebiased, NeedsLabelsAndValidWeights) {
  const Splits s = small_splits(0.99, 6);
  const TrainConfig c = quick_config(1);
  EXPECT_THROW(train_debiased(c, s.train.masked(), s.val, {1, 1}), ParameterError);
  EXPECT_THROW(train_debiased(c, s.train, s.val, {-1, 1}), ParameterError);
  const DebiasedResult d = train_debiased(c, s.train, s.val, {1, 1});
  EXPECT_GT(std::abs(d.report.epochs[0].train_penalty), 0.0);
}

TEST(FitBiasPredictor, PseudoLabelsReplaceGroundTruth) {
  const Splits s = small_splits(0.999, 7);
  TrainConfig c = quick_config(5);
  c.snapshot_epochs = {5};
  const VanillaResult v = train_vanilla(c, s.train, s.val);
  const PredictorResult p = fit_bias_predictor(v.snapshots.at(5), s.train, s.val, 1);
  EXPECT_EQ(p.train.hidden_bias, *s.train.bias);
  // What phase 3 sees is the predictor's output, never the hidden labels.
  const std::vector<int> expected = predict_bias(p.predictor, embed(v.snapshots.at(5), s.train.features));
  EXPECT_EQ(*p.train.data.bias, expected);
  EXPECT_EQ(p.train.data.n_biases, p.predictor.k());
  EXPECT_GE(p.selection.k, 2);

  const PredictorResult one = fit_bias_predictor(v.snapshots.at(5), s.train, s.val, 1, 1);
  for (int b : *one.train.data.bias) EXPECT_EQ(b, 0);
}

TEST(Search, ForcedZeroCandidate) {
  const Splits s = small_splits(0.99, 8);
  Rng rng(1);
  const SearchResult r = search_hyperparams(quick_config(1), s.train, s.val, 1, {1e-2, 50.0}, rng,
                                            {}, std::vector<EndWeights>{{0, 0}});
  EXPECT_EQ(r.best, (EndWeights{0, 0}));
  ASSERT_EQ(r.trials.size(), 1u);
}

TEST(Search, TiesGoToTheSmallerSum) {
  const Splits s = small_splits(0.99, 9);
  Rng rng(1);
  // Zero epochs: every candidate is the same initialization.
  const SearchResult r = search_hyperparams(quick_config(0), s.train, s.val, 3, {1e-2, 50.0}, rng,
                                            {}, std::vector<EndWeights>{{2, 2}, {1, 1}, {3, 0.5}});
  EXPECT_EQ(r.best, (EndWeights{1, 1}));
}

TEST(Search, RandomCandidatesThreadedMatchesSerial) {
  const Splits s = small_splits(0.99, 10);
  TrainConfig c = quick_config(2);
  Rng a(3);
  const SearchResult serial = search_hyperparams(c, s.train, s.val, 4, {1e-2, 50.0}, a);
  c.search_threads = 3;
  Rng b(3);
  const SearchResult threaded = search_hyperparams(c, s.train, s.val, 4, {1e-2, 50.0}, b);
  ASSERT_EQ(serial.trials.size(), 4u);
  EXPECT_EQ(serial.trials[0].weights, (EndWeights{0, 0}));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(serial.trials[i].weights, threaded.trials[i].weights);
    EXPECT_EQ(serial.trials[i].val_accuracy, threaded.trials[i].val_accuracy);
    if (i > 0) {
      EXPECT_GE(serial.trials[i].weights.alpha, 1e-2);
      EXPECT_LE(serial.trials[i].weights.beta, 50.0);
    }
  }
  EXPECT_EQ(serial.best, threaded.best);
  double best_val = 0.0;
  for (const Trial& t : serial.trials) best_val = std::max(best_val, t.val_accuracy);
  EXPECT_EQ(serial.best_run.report.val_accuracy, best_val);
  EXPECT_THROW(search_hyperparams(c, s.train, s.val, 0, {1e-2, 50.0}, a), ParameterError);
}

TEST(BiasnessCurve, UntrainedSnapshotStaysInRange) {
  const Splits s = small_splits(0.9, 11);
  Rng rng(4);
  std::map<int, ModelParams> snaps;
  snaps[0] = init_params(quick_config().architecture(s.test.dim(), 10), rng);
  const auto curve = biasness_curve(snaps, s.test, 0.1);
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_GE(curve[0].phi, 0.0);
  EXPECT_LE(curve[0].phi, 1.0);
  EXPECT_THROW(biasness_curve(snaps, s.test.masked(), 0.1), ParameterError);
}

TEST(TrainConfig, ValidateRejectsBadValues) {
  TrainConfig c = quick_config(3);
  c.snapshot_epochs = {4};
  EXPECT_THROW(c.validate(), ParameterError);
  c = quick_config(3);
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = quick_config(3);
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ParameterError);
}

}  // namespace
}  // namespace uend
