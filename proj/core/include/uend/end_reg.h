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

#ifndef UEND_END_REG_H_
#define UEND_END_REG_H_

#include <span>

#include "uend/types.h"

namespace uend {

// Weights of the disentangling (alpha) and entangling (beta) terms.
struct EndWeights {
  double alpha = 0.0;
  double beta = 0.0;

  bool is_zero() const { return alpha == 0.0 && beta == 0.0; }
  friend bool operator==(const EndWeights&, const EndWeights&) = default;
};

// All functions below take a batch of unit-norm embeddings z (M x N, one row
// per sample) and per-sample labels. For sample i:
//   B(i) = { a != i : b_a == b_i }            same bias
//   J(i) = { j : t_j == t_i, b_j != b_i }     same target, different bias
// A term whose set is empty contributes 0.

// R_perp_i = mean_{a in B(i)} z_i . z_a
Vector disentangle_term(const Matrix& z, std::span<const int> bias_labels);

// R_par_i = -mean_{j in J(i)} z_i . z_j
Vector entangle_term(const Matrix& z, std::span<const int> target_labels,
                     std::span<const int> bias_labels);

// R = mean_i (alpha R_perp_i + beta R_par_i)
double end_penalty(const Matrix& z, std::span<const int> target_labels,
                   std::span<const int> bias_labels, const EndWeights& w);

// dR/dz, M x N. Each z_i also appears in its neighbours' sets, so
// dR/dz_k = (1/M) sum_j (A_kj + A_jk) z_j with A the per-pair weights.
Matrix end_gradient(const Matrix& z, std::span<const int> target_labels,
                    std::span<const int> bias_labels, const EndWeights& w);

}  // namespace uend

#endif  // UEND_END_REG_H_
