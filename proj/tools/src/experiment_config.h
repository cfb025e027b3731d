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

#ifndef UEND_TOOLS_EXPERIMENT_CONFIG_H_
#define UEND_TOOLS_EXPERIMENT_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uend/data.h"
#include "uend/pipeline.h"

namespace uend::tools {

enum class DataSource { kSynthetic, kIdx };

struct IdxPaths {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
};

struct DataSection {
  DataSource source = DataSource::kSynthetic;
  double rho = 0.999;
  std::optional<double> rho_val;  // default 1/N_T
  double rho_test = 0.1;
  std::size_t n_train = 5000;
  std::size_t n_val = 1500;
  std::size_t n_test = 2000;
  BiasSpec synthetic;  // rho and seed are taken from this section and the run
  IdxPaths idx;
  Palette palette = default_palette();
};

struct SearchSection {
  int budget = 24;
  double low = 1e-2;
  double high = 50.0;
  int threads = 1;
  std::optional<EndWeights> fixed;  // skips the search when set
};

struct ExperimentConfig {
  DataSection data;
  TrainConfig training;  // model and training sections
  int repeats = 3;       // seeds seed, seed+1, ...
  SearchSection search;
  std::filesystem::path output_dir = "run";

  // Snapshot epochs with the default {round(epochs/8), epochs} applied.
  std::vector<int> snapshot_epochs() const;
  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Parses and validates a JSON document. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical JSON (all fields, defaults filled in).
std::string config_to_json(const ExperimentConfig& config);

struct RunData {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Train/validation/test sets for one seed, per the data section.
RunData build_datasets(const DataSection& data, std::uint64_t seed);

}  // namespace uend::tools

#endif  // UEND_TOOLS_EXPERIMENT_CONFIG_H_
