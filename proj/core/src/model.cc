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

#include "uend/model.h"

#include <algorithm>
#include <cmath>

#include "uend/error.h"

namespace uend {
namespace {

constexpr double kProbabilityFloor = 1e-12;

void apply_activation(Activation a, const Matrix& pre, Matrix& post) {
  switch (a) {
    case Activation::kIdentity:
      post = pre;
      break;
    case Activation::kRelu:
      post = pre.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      post = pre.array().tanh().matrix();
      break;
  }
}

// dL/dpre given dL/dpost.
Matrix activation_backward(Activation a, const Matrix& pre, const Matrix& post,
                           const Matrix& grad_post) {
  switch (a) {
    case Activation::kIdentity:
      return grad_post;
    case Activation::kRelu:
      return (pre.array() > 0.0).select(grad_post, 0.0);
    case Activation::kTanh:
      return (grad_post.array() * (1.0 - post.array().square())).matrix();
  }
  return grad_post;
}

DenseLayer make_layer(int in, int out, Activation act, Rng& rng) {
  DenseLayer layer;
  layer.activation = act;
  const double limit = act == Activation::kRelu ? std::sqrt(6.0 / in)
                                                : std::sqrt(6.0 / (in + out));
  std::uniform_real_distribution<double> uni(-limit, limit);
  layer.weight.resize(out, in);
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < in; ++c) layer.weight(r, c) = uni(rng);
  }
  layer.bias = Vector::Zero(out);
  return layer;
}

template <class Params, class MapT>
std::vector<MapT> collect(Params& params) {
  std::vector<MapT> out;
  auto add = [&out](auto& layer) {
    out.emplace_back(layer.weight.data(), layer.weight.size());
    out.emplace_back(layer.bias.data(), layer.bias.size());
  };
  for (auto& layer : params.encoder) add(layer);
  add(params.classifier);
  return out;
}

void check_targets(std::span<const int> targets, Eigen::Index rows, Eigen::Index classes) {
  if (static_cast<Eigen::Index>(targets.size()) != rows) {
    throw ParameterError("target count differs from batch size");
  }
  for (int t : targets) {
    if (t < 0 || t >= classes) throw ParameterError("target label out of range");
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw ParameterError("unknown activation '" + name + "'");
}

std::string to_string(OptimizerKind k) {
  return k == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ParameterError("unknown optimizer '" + name + "'");
}

int ModelParams::input_dim() const {
  return encoder.empty() ? classifier.in_dim() : encoder.front().in_dim();
}

int ModelParams::embedding_dim() const {
  return encoder.empty() ? classifier.in_dim() : encoder.back().out_dim();
}

void ModelParams::validate() const {
  auto check = [](const DenseLayer& l) {
    if (l.bias.size() != l.weight.rows()) {
      throw ParameterError("layer bias length differs from output width");
    }
  };
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    check(encoder[i]);
    if (i > 0 && encoder[i].in_dim() != encoder[i - 1].out_dim()) {
      throw ParameterError("encoder layer shapes do not compose");
    }
  }
  check(classifier);
  if (classifier.in_dim() != embedding_dim()) {
    throw ParameterError("classifier input differs from embedding dimension");
  }
}

ModelParams ModelParams::zeros_like() const {
  ModelParams out = *this;
  for (auto t : tensors(out)) t.setZero();
  return out;
}

ModelParams init_params(const Architecture& arch, Rng& rng) {
  if (arch.input_dim < 1 || arch.embedding_dim < 1 || arch.n_classes < 2) {
    throw ParameterError("invalid architecture");
  }
  ModelParams params;
  int in = arch.input_dim;
  for (int width : arch.hidden) {
    if (width < 1) throw ParameterError("hidden width must be positive");
    params.encoder.push_back(make_layer(in, width, arch.hidden_activation, rng));
    in = width;
  }
  params.encoder.push_back(make_layer(in, arch.embedding_dim, arch.embedding_activation, rng));
  params.classifier = make_layer(arch.embedding_dim, arch.n_classes, Activation::kIdentity, rng);
  return params;
}

std::vector<Eigen::Map<Vector>> tensors(ModelParams& params) {
  return collect<ModelParams, Eigen::Map<Vector>>(params);
}

std::vector<Eigen::Map<const Vector>> tensors(const ModelParams& params) {
  return collect<const ModelParams, Eigen::Map<const Vector>>(params);
}

ForwardCache forward(const ModelParams& params, const Matrix& batch) {
  if (batch.cols() != params.input_dim()) {
    throw ParameterError("batch has " + std::to_string(batch.cols()) +
                         " columns, encoder expects " +
                         std::to_string(params.input_dim()));
  }
  ForwardCache cache;
  cache.input = batch;
  const Matrix* x = &cache.input;
  cache.pre.resize(params.encoder.size());
  cache.post.resize(params.encoder.size());
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    const DenseLayer& layer = params.encoder[l];
    cache.pre[l].noalias() = *x * layer.weight.transpose();
    cache.pre[l].rowwise() += layer.bias.transpose();
    apply_activation(layer.activation, cache.pre[l], cache.post[l]);
    x = &cache.post[l];
  }
  cache.embeddings = *x;

  const Eigen::Index m = batch.rows();
  cache.norms = cache.embeddings.rowwise().norm();
  cache.zero_embedding.assign(static_cast<std::size_t>(m), false);
  cache.z = cache.embeddings;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (cache.norms(i) > 0.0) {
      cache.z.row(i) /= cache.norms(i);
    } else {
      cache.zero_embedding[static_cast<std::size_t>(i)] = true;
      cache.z.row(i).setZero();
    }
  }

  cache.logits.noalias() = cache.z * params.classifier.weight.transpose();
  cache.logits.rowwise() += params.classifier.bias.transpose();
  cache.probabilities.resize(m, cache.logits.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const double top = cache.logits.row(i).maxCoeff();
    auto e = (cache.logits.row(i).array() - top).exp();
    cache.probabilities.row(i) = e / e.sum();
  }
  return cache;
}

double cross_entropy(const Matrix& probabilities, std::span<const int> targets) {
  if (probabilities.rows() == 0) throw ParameterError("empty batch");
  check_targets(targets, probabilities.rows(), probabilities.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    const double p = probabilities(i, targets[static_cast<std::size_t>(i)]);
    total -= std::log(std::max(p, kProbabilityFloor));
  }
  return total / static_cast<double>(probabilities.rows());
}

namespace {

ModelParams backward_impl(const ModelParams& params, const ForwardCache& cache,
                          std::span<const int> targets, const Matrix* end_gradient) {
  const Eigen::Index m = cache.input.rows();
  if (m == 0) throw ParameterError("empty batch");
  check_targets(targets, m, params.n_classes());
  ModelParams grads = params.zeros_like();

  // Softmax + mean cross-entropy.
  Matrix d_logits = cache.probabilities;
  for (Eigen::Index i = 0; i < m; ++i) d_logits(i, targets[static_cast<std::size_t>(i)]) -= 1.0;
  d_logits /= static_cast<double>(m);

  grads.classifier.weight.noalias() = d_logits.transpose() * cache.z;
  grads.classifier.bias = d_logits.colwise().sum().transpose();
  Matrix d_z = d_logits * params.classifier.weight;
  if (end_gradient != nullptr) {
    if (end_gradient->rows() != cache.z.rows() || end_gradient->cols() != cache.z.cols()) {
      throw ParameterError("end gradient shape differs from z");
    }
    d_z += *end_gradient;
  }

  // Normalization Jacobian (I - z z^T) / ||e||; zero rows pass nothing back.
  Matrix d_e(m, d_z.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    if (cache.zero_embedding[static_cast<std::size_t>(i)]) {
      d_e.row(i).setZero();
      continue;
    }
    const double along = cache.z.row(i).dot(d_z.row(i));
    d_e.row(i) = (d_z.row(i) - along * cache.z.row(i)) / cache.norms(i);
  }

  Matrix grad_post = std::move(d_e);
  for (std::size_t l = params.encoder.size(); l-- > 0;) {
    const DenseLayer& layer = params.encoder[l];
    const Matrix grad_pre =
        activation_backward(layer.activation, cache.pre[l], cache.post[l], grad_post);
    const Matrix& layer_input = l == 0 ? cache.input : cache.post[l - 1];
    grads.encoder[l].weight.noalias() = grad_pre.transpose() * layer_input;
    grads.encoder[l].bias = grad_pre.colwise().sum().transpose();
    if (l > 0) grad_post.noalias() = grad_pre * layer.weight;
  }
  return grads;
}

}  // namespace

ModelParams backward(const ModelParams& params, const ForwardCache& cache,
                     std::span<const int> targets) {
  return backward_impl(params, cache, targets, nullptr);
}

ModelParams backward(const ModelParams& params, const ForwardCache& cache,
                     std::span<const int> targets, const Matrix& end_gradient) {
  return backward_impl(params, cache, targets, &end_gradient);
}

OptimizerState make_optimizer(OptimizerKind kind, double learning_rate,
                              double weight_decay, const ModelParams& params) {
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (weight_decay < 0.0) throw ParameterError("weight decay must be nonnegative");
  OptimizerState state;
  state.kind = kind;
  state.learning_rate = learning_rate;
  state.weight_decay = weight_decay;
  if (kind == OptimizerKind::kAdam) {
    state.first_moment = params.zeros_like();
    state.second_moment = params.zeros_like();
  }
  return state;
}

void optimizer_step(ModelParams& params, const ModelParams& grads, OptimizerState& state) {
  auto p = tensors(params);
  const auto g = tensors(grads);
  if (p.size() != g.size()) throw ParameterError("gradient structure differs from params");
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].size() != g[k].size()) throw ParameterError("gradient shape differs from params");
  }
  const double lr = state.learning_rate;
  const double wd = state.weight_decay;
  ++state.step;

  if (state.kind == OptimizerKind::kSgd) {
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * (g[k] + wd * p[k]);
    return;
  }

  auto m = tensors(state.first_moment);
  auto v = tensors(state.second_moment);
  if (m.size() != p.size()) throw ParameterError("optimizer moments do not match params");
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (m[k].size() != p[k].size()) throw ParameterError("optimizer moments do not match params");
    m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
    v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k].cwiseAbs2();
    const auto m_hat = m[k].array() / c1;
    const auto v_hat = v[k].array() / c2;
    p[k].array() -= lr * (m_hat / (v_hat.sqrt() + state.epsilon) + wd * p[k].array());
  }
}

}  // namespace uend
