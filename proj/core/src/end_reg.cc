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

#include "uend/end_reg.h"

#include "uend/error.h"

namespace uend {
namespace {

void check_labels(const Matrix& z, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != z.rows()) {
    throw ParameterError("label count differs from batch size");
  }
}

// Row-normalized pair weights: disentangle[i][a] = 1/|B(i)| for a in B(i),
// entangle[i][j] = 1/|J(i)| for j in J(i).
struct PairWeights {
  Matrix disentangle;
  Matrix entangle;
};

PairWeights pair_weights(std::span<const int> targets, std::span<const int> bias) {
  const auto m = static_cast<Eigen::Index>(bias.size());
  PairWeights w{Matrix::Zero(m, m), Matrix::Zero(m, m)};
  for (Eigen::Index i = 0; i < m; ++i) {
    int n_same_bias = 0;
    int n_same_target = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i) continue;
      if (bias[j] == bias[i]) {
        w.disentangle(i, j) = 1.0;
        ++n_same_bias;
      } else if (!targets.empty() && targets[j] == targets[i]) {
        w.entangle(i, j) = 1.0;
        ++n_same_target;
      }
    }
    if (n_same_bias > 0) w.disentangle.row(i) /= n_same_bias;
    if (n_same_target > 0) w.entangle.row(i) /= n_same_target;
  }
  return w;
}

}  // namespace

Vector disentangle_term(const Matrix& z, std::span<const int> bias_labels) {
  check_labels(z, bias_labels);
  const PairWeights w = pair_weights({}, bias_labels);
  const Matrix gram = z * z.transpose();
  return w.disentangle.cwiseProduct(gram).rowwise().sum();
}

Vector entangle_term(const Matrix& z, std::span<const int> target_labels,
                     std::span<const int> bias_labels) {
  check_labels(z, target_labels);
  check_labels(z, bias_labels);
  const PairWeights w = pair_weights(target_labels, bias_labels);
  const Matrix gram = z * z.transpose();
  return -w.entangle.cwiseProduct(gram).rowwise().sum();
}

double end_penalty(const Matrix& z, std::span<const int> target_labels,
                   std::span<const int> bias_labels, const EndWeights& w) {
  check_labels(z, target_labels);
  check_labels(z, bias_labels);
  if (z.rows() == 0 || w.is_zero()) return 0.0;
  const PairWeights pw = pair_weights(target_labels, bias_labels);
  const Matrix a = w.alpha * pw.disentangle - w.beta * pw.entangle;
  const Matrix gram = z * z.transpose();
  return a.cwiseProduct(gram).sum() / static_cast<double>(z.rows());
}

Matrix end_gradient(const Matrix& z, std::span<const int> target_labels,
                    std::span<const int> bias_labels, const EndWeights& w) {
  check_labels(z, target_labels);
  check_labels(z, bias_labels);
  if (z.rows() == 0 || w.is_zero()) return Matrix::Zero(z.rows(), z.cols());
  const PairWeights pw = pair_weights(target_labels, bias_labels);
  const Matrix a = w.alpha * pw.disentangle - w.beta * pw.entangle;
  return (a + a.transpose()) * z / static_cast<double>(z.rows());
}

}  // namespace uend
