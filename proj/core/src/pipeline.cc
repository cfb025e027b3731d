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

#include "uend/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "uend/error.h"

namespace uend {
namespace {

bool all_finite(const ModelParams& p) {
  for (const auto& t : tensors(p)) {
    if (!t.allFinite()) return false;
  }
  return true;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(rows[k]));
  }
  return out;
}

std::vector<int> gather(const std::vector<int>& v, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(v[r]);
  return out;
}

int argmax_row(const Matrix& m, Eigen::Index row) {
  Eigen::Index arg = 0;
  m.row(row).maxCoeff(&arg);
  return static_cast<int>(arg);
}

void check_compatible(const Dataset& a, const Dataset& b, const char* what) {
  if (a.dim() != b.dim()) throw ParameterError(std::string(what) + " feature dimension mismatch");
  if (a.n_targets != b.n_targets) throw ParameterError(std::string(what) + " class count mismatch");
}

struct TrainOutcome {
  ModelParams params;
  std::map<int, ModelParams> snapshots;
  RunReport report;
};

// Shared by the vanilla and debiased trainers; with zero weights the two are
// bit-identical for a fixed seed.
TrainOutcome run_training(const TrainConfig& config, const Dataset& train, const Dataset& val,
                          const Monitor& monitor, const EndWeights& weights) {
  config.validate();
  train.validate();
  val.validate();
  if (train.size() == 0 || val.size() == 0) throw ParameterError("empty dataset");
  check_compatible(train, val, "train/val");
  if (monitor.test != nullptr) {
    monitor.test->validate();
    check_compatible(train, *monitor.test, "train/test");
  }
  const bool regularized = !weights.is_zero();
  if (regularized && !train.has_bias()) {
    throw ParameterError("EnD training needs a bias (pseudo-)label for every sample");
  }

  Rng rng(config.seed);
  TrainOutcome out;
  out.params = init_params(config.architecture(train.dim(), train.n_targets), rng);
  OptimizerState opt =
      make_optimizer(config.optimizer, config.learning_rate, config.weight_decay, out.params);
  out.report.chosen = weights;

  const Dataset* bias_eval = nullptr;
  if (monitor.test != nullptr && monitor.test->has_bias()) {
    bias_eval = monitor.test;
  } else if (val.has_bias()) {
    bias_eval = &val;
  }

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    double penalty_sum = 0.0;
    std::size_t correct = 0;
    int n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::span<const std::size_t> rows(order.data() + start,
                                              std::min(batch, order.size() - start));
      const Matrix x = gather_rows(train.features, rows);
      const std::vector<int> t = gather(train.targets, rows);
      const ForwardCache cache = forward(out.params, x);
      const double loss = cross_entropy(cache.probabilities, t);
      ModelParams grads;
      if (regularized) {
        const std::vector<int> b = gather(*train.bias, rows);
        penalty_sum += end_penalty(cache.z, t, b, weights);
        grads = backward(out.params, cache, t, end_gradient(cache.z, t, b, weights));
      } else {
        grads = backward(out.params, cache, t);
      }
      if (!std::isfinite(loss) || !std::isfinite(penalty_sum) || !all_finite(grads)) {
        throw RunError("training diverged", epoch);
      }
      for (Eigen::Index i = 0; i < cache.logits.rows(); ++i) {
        if (argmax_row(cache.logits, i) == t[static_cast<std::size_t>(i)]) ++correct;
      }
      loss_sum += loss;
      ++n_batches;
      optimizer_step(out.params, grads, opt);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / n_batches;
    rec.train_penalty = penalty_sum / n_batches;
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    rec.val_accuracy = evaluate(out.params, val).accuracy;
    if (monitor.test != nullptr) rec.test_accuracy = evaluate(out.params, *monitor.test).accuracy;
    if (bias_eval != nullptr) {
      const int n = std::max(bias_eval->n_targets, bias_eval->n_biases);
      rec.bias_accuracy =
          bias_pseudo_accuracy(predict(out.params, bias_eval->features), *bias_eval->bias, n);
    }
    out.report.epochs.push_back(rec);

    if (std::find(config.snapshot_epochs.begin(), config.snapshot_epochs.end(), epoch) !=
        config.snapshot_epochs.end()) {
      out.snapshots.emplace(epoch, out.params);
    }
  }

  out.report.val_accuracy = evaluate(out.params, val).accuracy;
  if (monitor.test != nullptr) out.report.test_accuracy = evaluate(out.params, *monitor.test).accuracy;
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ParameterError("epochs must be >= 0");
  if (batch_size < 1) throw ParameterError("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (weight_decay < 0.0) throw ParameterError("weight decay must be nonnegative");
  if (embedding_dim < 1) throw ParameterError("embedding dimension must be >= 1");
  for (int w : hidden) {
    if (w < 1) throw ParameterError("hidden widths must be >= 1");
  }
  for (int e : snapshot_epochs) {
    if (e < 1 || e > epochs) throw ParameterError("snapshot epochs must lie in [1, epochs]");
  }
  if (weights.alpha < 0.0 || weights.beta < 0.0) throw ParameterError("EnD weights must be >= 0");
  if (search_budget < 1) throw ParameterError("search budget must be >= 1");
  if (!(search_low > 0.0 && search_high > search_low)) {
    throw ParameterError("search interval must satisfy 0 < low < high");
  }
  if (search_threads < 1) throw ParameterError("search threads must be >= 1");
}

Architecture TrainConfig::architecture(int input_dim, int n_classes) const {
  Architecture arch;
  arch.input_dim = input_dim;
  arch.hidden = hidden;
  arch.embedding_dim = embedding_dim;
  arch.n_classes = n_classes;
  arch.hidden_activation = hidden_activation;
  arch.embedding_activation = embedding_activation;
  return arch;
}

VanillaResult train_vanilla(const TrainConfig& config, const Dataset& train, const Dataset& val,
                            const Monitor& monitor) {
  TrainOutcome run = run_training(config, train, val, monitor, EndWeights{});
  VanillaResult out{std::move(run.params), std::move(run.snapshots), std::move(run.report)};
  if (monitor.test != nullptr && monitor.test->has_bias() && monitor.test->rho < 1.0 &&
      monitor.test->n_targets >= 3) {
    for (const auto& point : biasness_curve(out.snapshots, *monitor.test, monitor.test->rho)) {
      out.report.phi_by_snapshot[point.epoch] = point.phi;
    }
  }
  return out;
}

PredictorResult fit_bias_predictor(const ModelParams& encoder_snapshot, const Dataset& train,
                                   const Dataset& val, std::uint64_t seed,
                                   std::optional<int> forced_k) {
  if (encoder_snapshot.input_dim() != train.dim() || encoder_snapshot.input_dim() != val.dim()) {
    throw ParameterError("snapshot input dimension differs from the data");
  }
  PredictorResult out;
  const Matrix z_val = embed(encoder_snapshot, val.features);
  out.predictor.pca = fit_pca(z_val);
  const Matrix projected = out.predictor.pca.project(z_val);
  if (forced_k) {
    out.selection.k = *forced_k;
    out.selection.model = kmeans_fit(projected, *forced_k, seed);
  } else {
    out.selection = select_k(projected, 2, 15, seed);
  }
  out.predictor.clusters = out.selection.model;
  out.train = pseudo_label_dataset(out.predictor, encoder_snapshot, train);
  return out;
}

DebiasedResult train_debiased(const TrainConfig& config, const Dataset& train, const Dataset& val,
                              const EndWeights& weights, const Monitor& monitor) {
  if (!train.has_bias()) throw ParameterError("every training sample needs a pseudo-label");
  if (weights.alpha < 0.0 || weights.beta < 0.0) throw ParameterError("EnD weights must be >= 0");
  TrainOutcome run = run_training(config, train, val, monitor, weights);
  return {std::move(run.params), std::move(run.report)};
}

SearchResult search_hyperparams(const TrainConfig& config, const Dataset& train,
                                const Dataset& val, int budget,
                                std::pair<double, double> interval, Rng& rng,
                                const Monitor& monitor,
                                std::optional<std::vector<EndWeights>> candidates) {
  if (budget < 1) throw ParameterError("search budget must be >= 1");
  const auto [low, high] = interval;
  if (!(low > 0.0 && high > low)) throw ParameterError("search interval must satisfy 0 < low < high");

  std::vector<EndWeights> pool;
  if (candidates) {
    pool = *candidates;
    if (pool.empty()) throw ParameterError("empty candidate list");
  } else {
    pool.push_back({0.0, 0.0});
    std::uniform_real_distribution<double> log_uniform(std::log(low), std::log(high));
    while (static_cast<int>(pool.size()) < budget) {
      const double alpha = std::exp(log_uniform(rng));
      const double beta = std::exp(log_uniform(rng));
      pool.push_back({alpha, beta});
    }
  }

  const std::size_t n = pool.size();
  std::vector<std::optional<DebiasedResult>> runs(n);
  std::vector<Trial> log;
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      DebiasedResult run = train_debiased(config, train, val, pool[i], monitor);
      Trial trial{static_cast<int>(i), pool[i], run.report.val_accuracy, run.report.test_accuracy};
      std::lock_guard<std::mutex> lock(log_mutex);
      log.push_back(trial);
      runs[i] = std::move(run);
    }
  };
  const int threads = std::clamp(config.search_threads, 1, static_cast<int>(n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      pool_threads.emplace_back([&, w]() {
        try {
          worker();
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
          next = n;
        }
      });
    }
    for (auto& th : pool_threads) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::sort(log.begin(), log.end(), [](const Trial& a, const Trial& b) { return a.index < b.index; });

  SearchResult out;
  out.trials = log;
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const Trial& cand = log[i];
    const Trial& cur = log[best];
    const double cand_sum = cand.weights.alpha + cand.weights.beta;
    const double cur_sum = cur.weights.alpha + cur.weights.beta;
    if (cand.val_accuracy > cur.val_accuracy ||
        (cand.val_accuracy == cur.val_accuracy && cand_sum < cur_sum)) {
      best = i;
    }
  }
  out.best = log[best].weights;
  out.best_run = std::move(*runs[best]);
  out.best_run.report.chosen = out.best;
  return out;
}

std::vector<int> max_weight_assignment(const Matrix& weights) {
  const auto n = static_cast<int>(weights.rows());
  if (weights.cols() != n) throw ParameterError("assignment needs a square matrix");
  if (n == 0) return {};
  // Hungarian algorithm with potentials on cost = -weight (1-indexed).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -weights(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double bias_pseudo_accuracy(std::span<const int> predictions, std::span<const int> truth,
                            int n_classes) {
  if (predictions.size() != truth.size()) throw ParameterError("length mismatch");
  if (predictions.empty()) throw ParameterError("empty label sequence");
  if (n_classes < 1) throw ParameterError("n_classes must be >= 1");
  Matrix confusion = Matrix::Zero(n_classes, n_classes);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] < 0 || predictions[i] >= n_classes) {
      throw ParameterError("prediction label exceeds n_classes");
    }
    if (truth[i] < 0 || truth[i] >= n_classes) throw ParameterError("true label exceeds n_classes");
    confusion(predictions[i], truth[i]) += 1.0;
  }
  const std::vector<int> match = max_weight_assignment(confusion);
  double hits = 0.0;
  for (int r = 0; r < n_classes; ++r) hits += confusion(r, match[static_cast<std::size_t>(r)]);
  return hits / static_cast<double>(predictions.size());
}

std::vector<CurvePoint> biasness_curve(const std::map<int, ModelParams>& snapshots,
                                       const Dataset& eval_set, double rho) {
  if (!eval_set.has_bias()) throw ParameterError("biasness curve needs ground-truth bias labels");
  std::vector<CurvePoint> out;
  for (const auto& [epoch, params] : snapshots) {
    const std::vector<int> preds = predict(params, eval_set.features);
    const JointBY joint = empirical_joint(*eval_set.bias, preds, eval_set.n_targets);
    CurvePoint point;
    point.epoch = epoch;
    point.report = estimate_phi(joint, rho, 0.0);
    point.phi = point.report.phi_global;
    out.push_back(std::move(point));
  }
  return out;
}

std::vector<int> predict(const ModelParams& params, const Matrix& features) {
  const ForwardCache cache = forward(params, features);
  std::vector<int> out(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = argmax_row(cache.logits, i);
  }
  return out;
}

Evaluation evaluate(const ModelParams& params, const Dataset& data) {
  if (data.size() == 0) throw ParameterError("cannot evaluate on an empty dataset");
  const std::vector<int> preds = predict(params, data.features);
  const int n_classes = std::max(data.n_targets, params.n_classes());
  std::vector<int> hits(static_cast<std::size_t>(n_classes), 0);
  std::vector<int> totals(static_cast<std::size_t>(n_classes), 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto t = static_cast<std::size_t>(data.targets[i]);
    ++totals[t];
    if (preds[i] == data.targets[i]) {
      ++hits[t];
      ++correct;
    }
  }
  Evaluation eval;
  eval.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  eval.per_class.resize(static_cast<std::size_t>(n_classes));
  for (std::size_t c = 0; c < eval.per_class.size(); ++c) {
    eval.per_class[c] = totals[c] > 0 ? static_cast<double>(hits[c]) / totals[c]
                                      : std::numeric_limits<double>::quiet_NaN();
  }
  return eval;
}

}  // namespace uend
