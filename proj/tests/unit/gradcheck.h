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

#ifndef UEND_TESTS_GRADCHECK_H_
#define UEND_TESTS_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "uend/end_reg.h"
#include "uend/model.h"

namespace uend::testing {

// Total objective: mean cross-entropy plus the EnD penalty on z.
inline double total_objective(const ModelParams& p, const Matrix& x, const std::vector<int>& t,
                              const std::vector<int>& b, const EndWeights& w) {
  const ForwardCache c = forward(p, x);
  return cross_entropy(c.probabilities, t) + end_penalty(c.z, t, b, w);
}

inline ModelParams analytic_gradient(const ModelParams& p, const Matrix& x,
                                     const std::vector<int>& t, const std::vector<int>& b,
                                     const EndWeights& w) {
  const ForwardCache c = forward(p, x);
  return backward(p, c, t, end_gradient(c.z, t, b, w));
}

// Largest per-tensor relative error ||g - g_fd|| / max(||g|| + ||g_fd||, 1e-12)
// against central differences with step h.
inline double max_relative_error(const ModelParams& p, const ModelParams& grad,
                                 const std::function<double(const ModelParams&)>& f,
                                 double h = 1e-5) {
  ModelParams probe = p;
  auto views = tensors(probe);
  const auto grads = tensors(grad);
  double worst = 0.0;
  for (std::size_t k = 0; k < views.size(); ++k) {
    Vector fd(views[k].size());
    for (Eigen::Index i = 0; i < views[k].size(); ++i) {
      const double saved = views[k](i);
      views[k](i) = saved + h;
      const double up = f(probe);
      views[k](i) = saved - h;
      const double down = f(probe);
      views[k](i) = saved;
      fd(i) = (up - down) / (2.0 * h);
    }
    const double denom = std::max(grads[k].norm() + fd.norm(), 1e-12);
    worst = std::max(worst, (grads[k] - fd).norm() / denom);
  }
  return worst;
}

// Same check for dR/dz against central differences of end_penalty.
inline double end_gradient_error(const Matrix& z, const std::vector<int>& t,
                                 const std::vector<int>& b, const EndWeights& w,
                                 double h = 1e-6) {
  const Matrix g = end_gradient(z, t, b, w);
  Matrix fd(z.rows(), z.cols());
  Matrix probe = z;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      probe(i, j) = z(i, j) + h;
      const double up = end_penalty(probe, t, b, w);
      probe(i, j) = z(i, j) - h;
      const double down = end_penalty(probe, t, b, w);
      probe(i, j) = z(i, j);
      fd(i, j) = (up - down) / (2.0 * h);
    }
  }
  return (g - fd).norm() / std::max(g.norm() + fd.norm(), 1e-12);
}

inline Matrix random_unit_rows(int m, int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix z(m, n);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = g(rng);
    z.row(i).normalize();
  }
  return z;
}

// Entries uniform in [-1, 1] from a fixed seed.
inline Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline std::vector<int> random_labels(int m, int n_classes, Rng& rng) {
  std::uniform_int_distribution<int> u(0, n_classes - 1);
  std::vector<int> out(static_cast<std::size_t>(m));
  for (int& v : out) v = u(rng);
  return out;
}

}  // namespace uend::testing

#endif  // UEND_TESTS_GRADCHECK_H_
