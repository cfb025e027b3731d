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

#ifndef UEND_BIASNESS_H_
#define UEND_BIASNESS_H_

#include <span>
#include <string>
#include <vector>

#include "uend/types.h"

namespace uend {

// Theoretical model of how a learner splits its errors between following
// the bias (biasness phi) and unrelated mistakes (eps), for data where the
// bias equals the target with probability rho.
struct TheoryParams {
  double rho = 0.99;
  double phi = 0.0;
  double eps = 0.0;
  int n_t = 10;

  // Throws ParameterError; requires n_t >= 3 so that N_T - 2 + rho > 0.
  void validate() const;
};

// P(B = b, Y = y), rows indexed by bias, columns by prediction.
struct JointBY {
  Matrix table;
  int n_t() const { return static_cast<int>(table.rows()); }
};

// P(T = t, B = b, Y = y), flattened as ((t * N + b) * N + y).
struct JointTBY {
  int n_t = 0;
  std::vector<double> p;
  double operator()(int t, int b, int y) const {
    return p[static_cast<std::size_t>((t * n_t + b) * n_t + y)];
  }
};

// Normalized mutual information between bias and prediction for a learner
// that always predicts the target: log_N { N rho [(1-rho)/(rho (N-1))]^(1-rho) }.
double nmi_perfect(double rho, int n_t);

// Five-case joint: aligned and correct; bias-conflicting and correct
// (1-phi); bias-conflicting and predicting the bias (phi); aligned but wrong
// (eps); all three distinct (eps). Every other (t,b,y) pattern is 0.
JointTBY joint_tby(const TheoryParams& params);

// Sum over T of joint_tby. Diagonal [rho(1-eps) + phi(1-rho)]/N,
// off-diagonal [(1-phi)(1-rho) + rho eps] / (N (N-1)).
JointBY marginal_by(const TheoryParams& params);

// Closed form of 2 I(B,Y) / (H(B) + H(Y)) for marginal_by, clamped to [0,1].
double nmi_by(const TheoryParams& params);

// Normalized count table of (bias, prediction) pairs.
JointBY empirical_joint(std::span<const int> bias_labels, std::span<const int> predictions,
                        int n_t);

struct BiasnessReport {
  double rho = 0.0;
  double eps = 0.0;
  double phi_global = 0.0;  // mean of phi_cells
  Matrix phi_cells;         // per (b, y)
  double nmi_by = 0.0;      // closed form at (rho, phi_global, eps)
  double nmi_perfect = 0.0;
  std::vector<std::string> warnings;
};

// Inverts marginal_by cell by cell after clipping each measured probability
// to the range that maps onto phi in [0,1]; the global phi is the mean.
BiasnessReport estimate_phi(const JointBY& joint, double rho, double eps = 0.0);

}  // namespace uend

#endif  // UEND_BIASNESS_H_
