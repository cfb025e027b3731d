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

#ifndef UEND_MODEL_H_
#define UEND_MODEL_H_

#include <span>
#include <string>
#include <vector>

#include "uend/types.h"

namespace uend {

enum class Activation { kIdentity, kRelu, kTanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// y = act(x W^T + b) for a row-per-sample batch x.
struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::kIdentity;

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }
};

// Encoder f followed by unit normalization and a linear classifier g.
// Gradients and optimizer moments reuse this type with identical shapes.
struct ModelParams {
  std::vector<DenseLayer> encoder;
  DenseLayer classifier;

  int input_dim() const;
  int embedding_dim() const;
  int n_classes() const { return classifier.out_dim(); }

  // Throws ParameterError unless consecutive shapes compose.
  void validate() const;

  // Same shapes, all zeros.
  ModelParams zeros_like() const;
};

struct Architecture {
  int input_dim = 0;
  std::vector<int> hidden = {64, 64};
  int embedding_dim = 32;
  int n_classes = 10;
  Activation hidden_activation = Activation::kRelu;
  Activation embedding_activation = Activation::kIdentity;
};

// He-uniform weights for ReLU layers, Glorot-uniform otherwise; zero biases.
ModelParams init_params(const Architecture& arch, Rng& rng);

// Flat views of every tensor, encoder layers first, weight before bias.
std::vector<Eigen::Map<Vector>> tensors(ModelParams& params);
std::vector<Eigen::Map<const Vector>> tensors(const ModelParams& params);

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;   // per encoder layer, before activation
  std::vector<Matrix> post;  // per encoder layer, after activation
  Matrix embeddings;         // e = f(x), equals post.back()
  Vector norms;              // ||e_i||
  std::vector<bool> zero_embedding;  // rows where e_i == 0 and z_i := 0
  Matrix z;                  // e_i / ||e_i||
  Matrix logits;
  Matrix probabilities;

  int batch_size() const { return static_cast<int>(input.rows()); }
};

ForwardCache forward(const ModelParams& params, const Matrix& batch);

// Mean over the batch of -log p(target); probabilities are floored at 1e-12.
double cross_entropy(const Matrix& probabilities, std::span<const int> targets);

// Gradient of mean cross-entropy; with `end_gradient` (dR/dz, batch x N) the
// regularizer's contribution is pulled back through the normalization.
ModelParams backward(const ModelParams& params, const ForwardCache& cache,
                     std::span<const int> targets);
ModelParams backward(const ModelParams& params, const ForwardCache& cache,
                     std::span<const int> targets, const Matrix& end_gradient);

enum class OptimizerKind { kSgd, kAdam };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& name);

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  ModelParams first_moment;   // Adam only
  ModelParams second_moment;  // Adam only
};

OptimizerState make_optimizer(OptimizerKind kind, double learning_rate,
                              double weight_decay, const ModelParams& params);

// SGD: p -= lr (g + wd p). Adam: bias-corrected moments with decoupled
// weight decay, p -= lr (m_hat / (sqrt(v_hat) + eps) + wd p).
void optimizer_step(ModelParams& params, const ModelParams& grads, OptimizerState& state);

}  // namespace uend

#endif  // UEND_MODEL_H_
