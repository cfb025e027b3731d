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

#ifndef UEND_TYPES_H_
#define UEND_TYPES_H_

#include <random>

#include <Eigen/Dense>

namespace uend {

// Row-per-sample matrices throughout: a batch of M samples with D features
// is an M x D matrix.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// All randomness flows through explicit streams of this type.
using Rng = std::mt19937_64;

}  // namespace uend

#endif  // UEND_TYPES_H_
