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

#ifndef UEND_BIAS_PREDICTOR_H_
#define UEND_BIAS_PREDICTOR_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uend/data.h"
#include "uend/model.h"
#include "uend/types.h"

namespace uend {

struct PcaModel {
  Vector mean;        // N
  Matrix components;  // k_pca x N, orthonormal rows, decreasing variance
  double retained_variance = 0.0;  // fraction in [0,1]
  bool degenerate = false;         // input had zero variance

  int n_components() const { return static_cast<int>(components.rows()); }
  Matrix project(const Matrix& x) const;
};

inline constexpr int kMaxPcaComponents = 32;

// Top eigenvectors of the covariance of X (rows are samples). Keeps the
// smallest count whose variance fraction reaches `variance_target`, capped
// at min(N, 32).
PcaModel fit_pca(const Matrix& x, double variance_target = 0.95);

struct ClusterModel {
  Matrix centroids;  // k x d
  double inertia = 0.0;  // WCSS of the final assignment
  std::vector<int> assignments;  // for the fitting points
  std::vector<double> wcss_history;  // per Lloyd iteration of the kept restart

  int k() const { return static_cast<int>(centroids.rows()); }
};

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 300;
  double tolerance = 1e-6;  // max centroid shift
};

// Lloyd iterations from k-means++ seeding; best restart by WCSS.
ClusterModel kmeans_fit(const Matrix& points, int k, std::uint64_t seed,
                        const KMeansOptions& options = {});

// Nearest centroid, ties to the lowest index.
int nearest_centroid(const Matrix& centroids, const RowVector& point);

// Mean silhouette over all points. Singleton clusters score 0. Throws
// EvaluationError when fewer than two clusters are non-empty.
double silhouette(const Matrix& points, std::span<const int> assignments);

struct KSelection {
  int k = 0;
  ClusterModel model;
  std::vector<std::pair<int, double>> scores;  // (k, silhouette) per valid k
  std::vector<std::string> warnings;
};

// Fits every k in [k_min, k_max] and keeps the best silhouette, ties to the
// smaller k. With n <= k_max the range shrinks to [2, n-1].
KSelection select_k(const Matrix& points, int k_min, int k_max, std::uint64_t seed,
                    const KMeansOptions& options = {});

struct BiasPredictor {
  PcaModel pca;
  ClusterModel clusters;

  int k() const { return clusters.k(); }
};

int predict_bias(const BiasPredictor& predictor, const Vector& z);
std::vector<int> predict_bias(const BiasPredictor& predictor, const Matrix& z);

// Normalized embeddings of `features` under the encoder part of `params`.
Matrix embed(const ModelParams& params, const Matrix& features);

struct PseudoLabeled {
  Dataset data;  // bias field holds pseudo-labels, n_biases = k
  std::vector<int> hidden_bias;  // ground truth, for evaluation only
};

PseudoLabeled pseudo_label_dataset(const BiasPredictor& predictor,
                                   const ModelParams& encoder, const Dataset& train);

}  // namespace uend

#endif  // UEND_BIAS_PREDICTOR_H_
