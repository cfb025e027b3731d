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

#ifndef UEND_SERIALIZATION_H_
#define UEND_SERIALIZATION_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "uend/bias_predictor.h"
#include "uend/biasness.h"
#include "uend/model.h"

namespace uend {

inline constexpr int kCheckpointVersion = 1;
inline constexpr int kPredictorVersion = 1;

struct Checkpoint {
  ModelParams params;
  std::optional<OptimizerState> optimizer;
  int epoch = 0;
};

// JSON documents. Doubles are written with round-trip precision, so a
// save/load cycle is exact.
std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string predictor_to_json(const BiasPredictor& predictor);
BiasPredictor predictor_from_json(const std::string& text);
void save_predictor(const std::filesystem::path& path, const BiasPredictor& predictor);
BiasPredictor load_predictor(const std::filesystem::path& path);

// `index,pseudo_label` rows.
void write_pseudo_labels_csv(const std::filesystem::path& path, std::span<const int> labels);

// {rho, eps, phi_global, nmi_by, nmi_perfect, phi_cells, warnings}
std::string biasness_report_to_json(const BiasnessReport& report);

// Shared text helpers for the tools.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace uend

#endif  // UEND_SERIALIZATION_H_
