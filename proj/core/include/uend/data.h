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

#ifndef UEND_DATA_H_
#define UEND_DATA_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "uend/types.h"

namespace uend {

struct LabeledSample {
  Vector features;
  int target = 0;
  std::optional<int> bias;
};

// A labeled collection with a fixed feature dimension. Bias labels are
// optional so that unsupervised phases can run with them masked.
struct Dataset {
  Matrix features;  // n x D
  std::vector<int> targets;
  std::optional<std::vector<int>> bias;
  int n_targets = 0;
  int n_biases = 0;
  double rho = 0.0;  // target/bias correlation used at generation

  std::size_t size() const { return targets.size(); }
  int dim() const { return static_cast<int>(features.cols()); }
  bool has_bias() const { return bias.has_value(); }

  LabeledSample sample(std::size_t i) const;

  // Rows `indices`, in order. Metadata is copied.
  Dataset subset(std::span<const std::size_t> indices) const;

  // Copy with the bias labels removed.
  Dataset masked() const;

  // Throws ParameterError if shapes or label ranges are inconsistent.
  void validate() const;
};

// Parameters of the block-structured synthetic generator. A sample is
// [target block | bias block]; each block is the class center (a basis
// vector) plus isotropic Gaussian noise.
struct BiasSpec {
  double rho = 0.999;
  int n_classes = 10;
  int dim_target = 10;
  int dim_bias = 10;
  double noise_target = 0.3;
  double noise_bias = 0.05;
  std::uint64_t seed = 0;
  // When set, the bias block must be the easier pattern.
  bool malignant = true;

  int dim() const { return dim_target + dim_bias; }
  void validate() const;
};

// Draws a bias class for `target`: the target itself with probability rho,
// otherwise one of the remaining classes uniformly.
int assign_bias_label(int target, double rho, int n_classes, Rng& rng);

// Features for one synthetic sample with the given labels.
Vector synthetic_features(const BiasSpec& spec, int target, int bias, Rng& rng);

// n samples with class-balanced targets (i mod N_T, shuffled) and bias labels
// from assign_bias_label.
Dataset generate_synthetic(const BiasSpec& spec, std::size_t n, Rng& rng);

// Grayscale images as read from IDX files.
struct RawImages {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<std::uint8_t>> pixels;  // one rows*cols grid each

  std::size_t size() const { return pixels.size(); }
};

struct IdxData {
  RawImages images;
  std::vector<int> labels;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Reads an images/labels pair of big-endian IDX files. Throws FormatError
// with a byte offset on bad magic, truncation or count mismatch.
IdxData load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

void write_idx_images(const std::filesystem::path& path, const RawImages& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels);

using Color = std::array<std::uint8_t, 3>;
using Palette = std::vector<Color>;

// Pixels strictly below this value are background.
inline constexpr std::uint8_t kBackgroundThreshold = 16;

// Ten well-separated RGB colors.
Palette default_palette();

// 3 x rows x cols features in [0,1], channel-major. Background pixels take
// `background`; foreground pixels keep their gray level in all channels.
Vector colorize_image(std::span<const std::uint8_t> image, const Color& background);

// Colors every image's background with the palette entry of a bias class
// drawn by assign_bias_label. N_T is the palette size.
Dataset colorize(const RawImages& images, std::span<const int> targets, double rho,
                 const Palette& palette, Rng& rng);

// Rebuilds the features of row `index` for a new bias label.
using Rebias = std::function<Vector(std::size_t index, int bias, Rng& rng)>;

// Regenerates the bias block of a synthetic dataset, keeping the target block.
Rebias synthetic_rebias(const BiasSpec& spec, const Dataset& data);

// Recolors source image `index` (row i of the dataset came from image i).
Rebias image_rebias(const RawImages& images, const Palette& palette);

struct Split {
  Dataset train;
  Dataset val;
};

// Holds out ceil(fraction * n) samples and re-biases them at rho_val
// (default 1/N_T). The two parts are disjoint.
Split make_validation_split(const Dataset& data, double fraction,
                            std::optional<double> rho_val, const Rebias& rebias,
                            Rng& rng);

// CSV: header `f0,...,f{D-1},target,bias`, one row per sample; empty bias
// column when labels are absent. Metadata travels in a leading comment line
// `# n_targets=.. n_biases=.. rho=..`.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace uend

#endif  // UEND_DATA_H_
