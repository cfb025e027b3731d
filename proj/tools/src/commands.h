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

#ifndef UEND_TOOLS_COMMANDS_H_
#define UEND_TOOLS_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "experiment_config.h"
#include "uend/error.h"

namespace uend::tools {

// Output could not be written.
class IoError : public Error {
 public:
  using Error::Error;
};

enum class Phase { kSnapshots = 1, kPseudoLabels = 2, kAll = 3 };

// "1", "2", "3" or "all"; 3 and all both run the full pipeline.
Phase parse_phase(const std::string& text);

struct Options {
  std::optional<std::uint64_t> seed;  // overrides training.seed
  Phase phase = Phase::kAll;
  std::optional<std::filesystem::path> out;  // overrides output.dir
  bool quiet = false;
};

// --out, else output.dir resolved against `output_root` when relative.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const Options& options,
                                         const std::optional<std::filesystem::path>& output_root);

// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

// Writes train.csv, val.csv and test.csv under dir/data for the first seed.
void cmd_generate(const ExperimentConfig& config, const std::filesystem::path& dir,
                  const Options& options, std::ostream& log);

// Phases 1-3 for every repeat, then the biasness curve and evaluation.
// Layout: config.json, manifest.json, checkpoints/, reports/.
void cmd_pipeline(const ExperimentConfig& config, const std::filesystem::path& dir,
                  const Options& options, std::ostream& log);

// Parses a CSV with `bias` and `prediction` columns (others ignored).
struct LabelPairs {
  std::vector<int> bias;
  std::vector<int> prediction;
};
LabelPairs read_label_pairs(std::istream& in);

// Report JSON for the pairs at correlation rho; n_t defaults to the largest
// label + 1.
std::string cmd_biasness(const LabelPairs& pairs, double rho, std::optional<int> n_t,
                         double eps = 0.0);

// CSV `rho,phi,nmi_perfect,nmi_by`: for every rho in the grid, phi from 0 to
// 1 in steps of phi_step.
std::string cmd_curves(const std::vector<double>& rho_grid, int n_t, double phi_step = 0.05);

// 1/N_T, 0.2, 0.3, ..., 0.9, 0.95, 0.99, 0.999.
std::vector<double> default_rho_grid(int n_t);

}  // namespace uend::tools

#endif  // UEND_TOOLS_COMMANDS_H_
