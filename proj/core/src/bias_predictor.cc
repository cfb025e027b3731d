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

#include "uend/bias_predictor.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uend/error.h"

namespace uend {
namespace {

// Above this many points the silhouette distance matrix is not cached.
constexpr Eigen::Index kMaxCachedDistances = 4000;

double squared_distance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

std::vector<int> assign_all(const Matrix& points, const Matrix& centroids, double* wcss) {
  std::vector<int> out(static_cast<std::size_t>(points.rows()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(points, i, centroids, c);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    out[static_cast<std::size_t>(i)] = best;
    total += best_d;
  }
  if (wcss != nullptr) *wcss = total;
  return out;
}

double wcss_of(const Matrix& points, const Matrix& centroids, const std::vector<int>& assign) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += squared_distance(points, i, centroids, assign[static_cast<std::size_t>(i)]);
  }
  return total;
}

Matrix seed_plus_plus(const Matrix& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Matrix centroids(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centroids.row(0) = points.row(pick(rng));
  Vector d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2(i) = squared_distance(points, i, centroids, 0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> uni(0.0, total);
      double r = uni(rng);
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        r -= d2(i);
        if (r < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centroids.row(c) = points.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2(i) = std::min(d2(i), squared_distance(points, i, centroids, c));
    }
  }
  return centroids;
}

ClusterModel lloyd(const Matrix& points, Matrix centroids, const KMeansOptions& options) {
  ClusterModel model;
  const Eigen::Index k = centroids.rows();
  std::vector<int> assign = assign_all(points, centroids, nullptr);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const int c = assign[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    double shift = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) continue;  // keep empty centroid
      const RowVector updated = sums.row(c) / counts[static_cast<std::size_t>(c)];
      shift = std::max(shift, (updated - centroids.row(c)).norm());
      centroids.row(c) = updated;
    }
    model.wcss_history.push_back(wcss_of(points, centroids, assign));
    if (shift < options.tolerance) break;
    assign = assign_all(points, centroids, nullptr);
  }
  model.assignments = assign_all(points, centroids, &model.inertia);
  model.centroids = std::move(centroids);
  return model;
}

// Mean silhouette given a distance oracle dist(i, j).
template <class Dist>
double silhouette_impl(Eigen::Index n, std::span<const int> assignments, Dist dist) {
  if (static_cast<Eigen::Index>(assignments.size()) != n) {
    throw ParameterError("assignment count differs from point count");
  }
  if (n == 0) throw EvaluationError("silhouette of an empty set");
  int n_clusters = 0;
  for (int a : assignments) {
    if (a < 0) throw ParameterError("negative cluster id");
    n_clusters = std::max(n_clusters, a + 1);
  }
  std::vector<int> sizes(static_cast<std::size_t>(n_clusters), 0);
  for (int a : assignments) ++sizes[static_cast<std::size_t>(a)];
  const auto non_empty = std::count_if(sizes.begin(), sizes.end(), [](int s) { return s > 0; });
  if (non_empty < 2) {
    throw EvaluationError("silhouette needs at least two non-empty clusters");
  }

  std::vector<double> sums(static_cast<std::size_t>(n_clusters));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int own = assignments[static_cast<std::size_t>(i)];
    if (sizes[static_cast<std::size_t>(own)] == 1) continue;  // singleton scores 0
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) sums[static_cast<std::size_t>(assignments[static_cast<std::size_t>(j)])] += dist(i, j);
    }
    const double a = sums[static_cast<std::size_t>(own)] / (sizes[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < n_clusters; ++c) {
      if (c == own || sizes[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, sums[static_cast<std::size_t>(c)] / sizes[static_cast<std::size_t>(c)]);
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

}  // namespace

Matrix PcaModel::project(const Matrix& x) const {
  if (x.cols() != mean.size()) throw ParameterError("PCA input dimension mismatch");
  return (x.rowwise() - mean.transpose()) * components.transpose();
}

PcaModel fit_pca(const Matrix& x, double variance_target) {
  if (x.rows() < 2) throw ParameterError("PCA needs at least 2 samples");
  if (!(variance_target > 0.0 && variance_target <= 1.0)) {
    throw ParameterError("variance target must lie in (0, 1]");
  }
  PcaModel pca;
  pca.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - pca.mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Eigen::Index n = x.cols();
  // Eigen sorts ascending; walk from the top.
  Vector values = eig.eigenvalues().cwiseMax(0.0);
  const double total = values.sum();
  const int cap = static_cast<int>(std::min<Eigen::Index>(n, kMaxPcaComponents));

  int keep = 1;
  double kept = 0.0;
  if (total <= std::numeric_limits<double>::epsilon() * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    pca.degenerate = true;
  } else {
    for (keep = 0; keep < cap;) {
      kept += values(n - 1 - keep);
      ++keep;
      if (kept / total >= variance_target - 1e-12) break;
    }
  }
  pca.retained_variance = pca.degenerate ? 0.0 : kept / total;
  pca.components.resize(keep, n);
  for (int c = 0; c < keep; ++c) {
    Vector v = eig.eigenvectors().col(n - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    pca.components.row(c) = v.transpose();
  }
  return pca;
}

ClusterModel kmeans_fit(const Matrix& points, int k, std::uint64_t seed,
                        const KMeansOptions& options) {
  if (k < 1) throw ParameterError("k must be >= 1");
  if (points.rows() < k) throw ParameterError("fewer points than clusters");
  Rng rng(seed);
  ClusterModel best;
  bool have = false;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    ClusterModel model = lloyd(points, seed_plus_plus(points, k, rng), options);
    if (!have || model.inertia < best.inertia) {
      best = std::move(model);
      have = true;
    }
  }
  return best;
}

int nearest_centroid(const Matrix& centroids, const RowVector& point) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double silhouette(const Matrix& points, std::span<const int> assignments) {
  return silhouette_impl(points.rows(), assignments, [&points](Eigen::Index i, Eigen::Index j) {
    return (points.row(i) - points.row(j)).norm();
  });
}

KSelection select_k(const Matrix& points, int k_min, int k_max, std::uint64_t seed,
                    const KMeansOptions& options) {
  if (k_min < 2 || k_max < k_min) throw ParameterError("invalid k range");
  KSelection out;
  const auto n = static_cast<int>(points.rows());
  if (n <= k_max) {
    k_min = 2;
    k_max = n - 1;
    out.warnings.push_back("only " + std::to_string(n) + " points; k range shrunk to [2, " +
                           std::to_string(k_max) + "]");
    if (k_max < k_min) throw EvaluationError("too few points to select k");
  }

  Matrix distances;
  const bool cached = points.rows() <= kMaxCachedDistances;
  if (cached) {
    distances.resize(points.rows(), points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      distances(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
        distances(i, j) = distances(j, i) = (points.row(i) - points.row(j)).norm();
      }
    }
  }

  double best_score = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    ClusterModel model = kmeans_fit(points, k, seed, options);
    double score = 0.0;
    try {
      score = cached ? silhouette_impl(points.rows(), model.assignments,
                                       [&distances](Eigen::Index i, Eigen::Index j) {
                                         return distances(i, j);
                                       })
                     : silhouette(points, model.assignments);
    } catch (const EvaluationError& e) {
      out.warnings.push_back("k=" + std::to_string(k) + " skipped: " + e.what());
      continue;
    }
    out.scores.emplace_back(k, score);
    if (score > best_score) {
      best_score = score;
      out.k = k;
      out.model = std::move(model);
    }
  }
  if (out.k == 0) throw EvaluationError("no k in range yields a valid partition");
  return out;
}

int predict_bias(const BiasPredictor& predictor, const Vector& z) {
  if (z.size() != predictor.pca.mean.size()) {
    throw ParameterError("embedding dimension differs from the fitted PCA");
  }
  const RowVector projected =
      (z - predictor.pca.mean).transpose() * predictor.pca.components.transpose();
  return nearest_centroid(predictor.clusters.centroids, projected);
}

std::vector<int> predict_bias(const BiasPredictor& predictor, const Matrix& z) {
  const Matrix projected = predictor.pca.project(z);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    out[static_cast<std::size_t>(i)] =
        nearest_centroid(predictor.clusters.centroids, projected.row(i));
  }
  return out;
}

Matrix embed(const ModelParams& params, const Matrix& features) {
  return forward(params, features).z;
}

PseudoLabeled pseudo_label_dataset(const BiasPredictor& predictor,
                                   const ModelParams& encoder, const Dataset& train) {
  if (encoder.embedding_dim() != predictor.pca.mean.size()) {
    throw ParameterError("encoder embedding dimension differs from the predictor");
  }
  PseudoLabeled out;
  if (train.bias) out.hidden_bias = *train.bias;
  out.data = train.masked();
  out.data.bias = predict_bias(predictor, embed(encoder, train.features));
  out.data.n_biases = predictor.k();
  return out;
}

}  // namespace uend
