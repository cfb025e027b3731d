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

#include "uend/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "uend/error.h"

namespace uend {
namespace {

void check_rho(double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw ParameterError("rho must lie in (0, 1], got " + std::to_string(rho));
  }
}

std::vector<int> balanced_targets(std::size_t n, int n_classes, Rng& rng) {
  std::vector<int> targets(n);
  for (std::size_t i = 0; i < n; ++i) targets[i] = static_cast<int>(i % n_classes);
  std::shuffle(targets.begin(), targets.end(), rng);
  return targets;
}

}  // namespace

LabeledSample Dataset::sample(std::size_t i) const {
  if (i >= size()) throw ParameterError("sample index out of range");
  LabeledSample s;
  s.features = features.row(static_cast<Eigen::Index>(i)).transpose();
  s.target = targets[i];
  if (bias) s.bias = (*bias)[i];
  return s;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.n_targets = n_targets;
  out.n_biases = n_biases;
  out.rho = rho;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.targets.reserve(indices.size());
  std::vector<int> b;
  if (bias) b.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= size()) throw ParameterError("subset index out of range");
    out.features.row(static_cast<Eigen::Index>(k)) =
        features.row(static_cast<Eigen::Index>(i));
    out.targets.push_back(targets[i]);
    if (bias) b.push_back((*bias)[i]);
  }
  if (bias) out.bias = std::move(b);
  return out;
}

Dataset Dataset::masked() const {
  Dataset out = *this;
  out.bias.reset();
  return out;
}

void Dataset::validate() const {
  if (n_targets < 2) throw ParameterError("dataset needs at least 2 target classes");
  if (static_cast<std::size_t>(features.rows()) != targets.size()) {
    throw ParameterError("feature rows and target count differ");
  }
  for (int t : targets) {
    if (t < 0 || t >= n_targets) throw ParameterError("target label out of range");
  }
  if (bias) {
    if (bias->size() != targets.size()) {
      throw ParameterError("bias and target counts differ");
    }
    for (int b : *bias) {
      if (b < 0 || b >= n_biases) throw ParameterError("bias label out of range");
    }
  }
}

void BiasSpec::validate() const {
  check_rho(rho);
  if (n_classes < 2) throw ParameterError("n_classes must be >= 2");
  if (dim_target < n_classes || dim_bias < n_classes) {
    throw ParameterError(
        "dim_target and dim_bias must be >= n_classes for orthogonal centers");
  }
  if (noise_target < 0.0 || noise_bias < 0.0) {
    throw ParameterError("noise levels must be nonnegative");
  }
  if (malignant && !(noise_bias < noise_target)) {
    throw ParameterError("a malignant bias needs noise_bias < noise_target");
  }
}

int assign_bias_label(int target, double rho, int n_classes, Rng& rng) {
  check_rho(rho);
  if (n_classes < 2) throw ParameterError("n_classes must be >= 2");
  if (target < 0 || target >= n_classes) {
    throw ParameterError("target out of range");
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < rho) return target;
  // Uniform over the other n_classes - 1 labels.
  std::uniform_int_distribution<int> other(0, n_classes - 2);
  const int k = other(rng);
  return k >= target ? k + 1 : k;
}

Vector synthetic_features(const BiasSpec& spec, int target, int bias, Rng& rng) {
  Vector x(spec.dim());
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int j = 0; j < spec.dim_target; ++j) {
    x(j) = (j == target ? 1.0 : 0.0) + spec.noise_target * gauss(rng);
  }
  for (int j = 0; j < spec.dim_bias; ++j) {
    x(spec.dim_target + j) = (j == bias ? 1.0 : 0.0) + spec.noise_bias * gauss(rng);
  }
  return x;
}

Dataset generate_synthetic(const BiasSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  if (n < static_cast<std::size_t>(spec.n_classes)) {
    throw ParameterError("need at least n_classes samples");
  }
  Dataset data;
  data.n_targets = spec.n_classes;
  data.n_biases = spec.n_classes;
  data.rho = spec.rho;
  data.targets = balanced_targets(n, spec.n_classes, rng);
  data.features.resize(static_cast<Eigen::Index>(n), spec.dim());
  std::vector<int> bias(n);
  for (std::size_t i = 0; i < n; ++i) {
    bias[i] = assign_bias_label(data.targets[i], spec.rho, spec.n_classes, rng);
    data.features.row(static_cast<Eigen::Index>(i)) =
        synthetic_features(spec, data.targets[i], bias[i], rng).transpose();
  }
  data.bias = std::move(bias);
  return data;
}

Palette default_palette() {
  return {
      Color{230, 25, 75},   Color{60, 180, 75},  Color{255, 225, 25},
      Color{0, 130, 200},   Color{245, 130, 48}, Color{145, 30, 180},
      Color{70, 240, 240},  Color{240, 50, 230}, Color{128, 128, 0},
      Color{255, 255, 255},
  };
}

Vector colorize_image(std::span<const std::uint8_t> image, const Color& background) {
  const auto pixels = static_cast<Eigen::Index>(image.size());
  Vector x(3 * pixels);
  for (Eigen::Index p = 0; p < pixels; ++p) {
    const std::uint8_t v = image[static_cast<std::size_t>(p)];
    for (int c = 0; c < 3; ++c) {
      const std::uint8_t out = v < kBackgroundThreshold ? background[c] : v;
      x(c * pixels + p) = out / 255.0;
    }
  }
  return x;
}

Dataset colorize(const RawImages& images, std::span<const int> targets, double rho,
                 const Palette& palette, Rng& rng) {
  check_rho(rho);
  const int n_t = static_cast<int>(palette.size());
  if (n_t < 2) throw ParameterError("palette needs at least 2 colors");
  if (std::set<Color>(palette.begin(), palette.end()).size() != palette.size()) {
    throw ParameterError("palette colors must be distinct");
  }
  if (targets.size() != images.size()) {
    throw ParameterError("image and target counts differ");
  }
  for (int t : targets) {
    if (t < 0 || t >= n_t) {
      throw ParameterError("palette size does not match the number of target classes");
    }
  }
  Dataset data;
  data.n_targets = n_t;
  data.n_biases = n_t;
  data.rho = rho;
  data.targets.assign(targets.begin(), targets.end());
  const auto dim = static_cast<Eigen::Index>(3 * images.rows * images.cols);
  data.features.resize(static_cast<Eigen::Index>(images.size()), dim);
  std::vector<int> bias(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (static_cast<Eigen::Index>(images.pixels[i].size()) * 3 != dim) {
      throw ParameterError("image size does not match rows x cols");
    }
    bias[i] = assign_bias_label(targets[i], rho, n_t, rng);
    data.features.row(static_cast<Eigen::Index>(i)) =
        colorize_image(images.pixels[i], palette[static_cast<std::size_t>(bias[i])])
            .transpose();
  }
  data.bias = std::move(bias);
  return data;
}

Rebias synthetic_rebias(const BiasSpec& spec, const Dataset& data) {
  // Copy what is needed so the callable outlives `data`.
  Matrix target_block = data.features.leftCols(spec.dim_target);
  return [spec, target_block = std::move(target_block)](std::size_t index, int bias,
                                                        Rng& rng) {
    Vector x(spec.dim());
    x.head(spec.dim_target) = target_block.row(static_cast<Eigen::Index>(index)).transpose();
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < spec.dim_bias; ++j) {
      x(spec.dim_target + j) = (j == bias ? 1.0 : 0.0) + spec.noise_bias * gauss(rng);
    }
    return x;
  };
}

Rebias image_rebias(const RawImages& images, const Palette& palette) {
  return [&images, &palette](std::size_t index, int bias, Rng&) {
    return colorize_image(images.pixels.at(index),
                          palette.at(static_cast<std::size_t>(bias)));
  };
}

Split make_validation_split(const Dataset& data, double fraction,
                            std::optional<double> rho_val, const Rebias& rebias,
                            Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ParameterError("validation fraction must lie in (0, 1)");
  }
  data.validate();
  const double rho = rho_val.value_or(1.0 / data.n_targets);
  check_rho(rho);
  const std::size_t n = data.size();
  const auto n_val = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  if (n_val == 0 || n_val >= n) throw ParameterError("split leaves an empty part");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  Split split;
  split.train = data.subset(train_idx);
  split.val = data.subset(val_idx);
  split.val.rho = rho;
  std::vector<int> bias(n_val);
  for (std::size_t k = 0; k < n_val; ++k) {
    bias[k] = assign_bias_label(split.val.targets[k], rho, data.n_targets, rng);
    split.val.features.row(static_cast<Eigen::Index>(k)) =
        rebias(val_idx[k], bias[k], rng).transpose();
  }
  split.val.bias = std::move(bias);
  return split;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot open " + path.string() + " for writing");
  out << "# n_targets=" << data.n_targets << " n_biases=" << data.n_biases
      << " rho=" << data.rho << '\n';
  for (int j = 0; j < data.dim(); ++j) out << 'f' << j << ',';
  out << "target,bias\n";
  out.precision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int j = 0; j < data.dim(); ++j) out << data.features(r, j) << ',';
    out << data.targets[i] << ',';
    if (data.bias) out << (*data.bias)[i];
    out << '\n';
  }
  if (!out) throw ParameterError("failed writing " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string(), 0);
  Dataset data;
  std::string line;
  std::uint64_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line()) throw FormatError("empty dataset file", 0);
  if (line.rfind('#', 0) == 0) {
    std::istringstream meta(line.substr(1));
    std::string kv;
    while (meta >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      if (key == "n_targets") data.n_targets = std::stoi(val);
      if (key == "n_biases") data.n_biases = std::stoi(val);
      if (key == "rho") data.rho = std::stod(val);
    }
    if (!next_line()) throw FormatError("missing header", line_no);
  }
  const auto columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  const int dim = columns - 2;
  if (dim < 1) throw FormatError("header needs feature, target and bias columns", line_no);

  std::vector<double> values;
  std::vector<int> targets;
  std::vector<int> bias;
  bool any_bias = false;
  bool any_missing = false;
  while (next_line()) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (static_cast<int>(cells.size()) != columns) {
      throw FormatError("wrong column count", line_no);
    }
    try {
      for (int j = 0; j < dim; ++j) values.push_back(std::stod(cells[j]));
      targets.push_back(std::stoi(cells[dim]));
      if (cells[dim + 1].empty()) {
        any_missing = true;
      } else {
        any_bias = true;
        bias.push_back(std::stoi(cells[dim + 1]));
      }
    } catch (const std::exception&) {
      throw FormatError("malformed number", line_no);
    }
  }
  if (any_bias && any_missing) throw FormatError("bias column partially filled", line_no);
  const auto n = static_cast<Eigen::Index>(targets.size());
  data.features = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, dim);
  data.targets = std::move(targets);
  if (any_bias) data.bias = std::move(bias);
  if (data.n_targets == 0) {
    data.n_targets = data.targets.empty() ? 0 : *std::max_element(data.targets.begin(), data.targets.end()) + 1;
  }
  if (data.n_biases == 0 && data.bias) {
    data.n_biases = *std::max_element(data.bias->begin(), data.bias->end()) + 1;
  }
  return data;
}

}  // namespace uend
