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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.h"
#include "experiment_config.h"
#include "uend/error.h"
#include "uend/serialization.h"

namespace {

using namespace uend;
using namespace uend::tools;

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kRuntime = 4 };

int report_error(const std::string& kind, const std::string& message, int code,
                 nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json err = {{"error", kind}, {"message", message}, {"exit_code", code}};
  err.update(extra);
  std::cerr << err.dump() << std::endl;
  return code;
}

std::optional<std::filesystem::path> output_root() {
  if (const char* root = std::getenv("UEND_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    return std::filesystem::path(root);
  }
  return std::nullopt;
}

void emit(const std::string& text, const std::optional<std::string>& out) {
  if (out) {
    write_text_file(*out, text);
  } else {
    std::cout << text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised bias mitigation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string phase = "all";
  std::optional<std::string> out;
  bool quiet = false;

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    cmd->add_option("--seed", seed, "overrides training.seed");
    cmd->add_option("--out", out, "run directory (overrides output.dir)");
    cmd->add_flag("--quiet", quiet, "no progress output");
  };

  CLI::App* generate = app.add_subcommand("generate", "write train/val/test CSV files");
  add_run_flags(generate);

  CLI::App* pipeline = app.add_subcommand("pipeline", "run the three-phase pipeline");
  add_run_flags(pipeline);
  pipeline->add_option("--phase", phase, "1, 2, 3 or all")->check(CLI::IsMember({"1", "2", "3", "all"}));

  std::string csv_path;
  double rho = 0.0;
  double eps = 0.0;
  std::optional<int> n_classes;
  CLI::App* biasness = app.add_subcommand("biasness", "estimate phi from (bias, prediction) pairs");
  biasness->add_option("--input", csv_path, "CSV with bias and prediction columns")->required();
  biasness->add_option("--rho", rho, "bias/target correlation of the data")->required();
  biasness->add_option("--eps", eps, "residual error term");
  biasness->add_option("--n-classes", n_classes, "number of classes");
  biasness->add_option("--out", out, "output file (default stdout)");

  std::vector<double> grid;
  int curve_classes = 10;
  double phi_step = 0.05;
  CLI::App* curves = app.add_subcommand("curves", "theoretical NMI curves as CSV");
  curves->add_option("--rho-grid", grid, "rho values in (0, 1)")->delimiter(',');
  curves->add_option("--n-classes", curve_classes, "number of classes");
  curves->add_option("--phi-step", phi_step, "phi spacing");
  curves->add_option("--out", out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what(), kConfig);
  }

  try {
    if (*generate || *pipeline) {
      Options options;
      options.seed = seed;
      options.phase = parse_phase(phase);
      if (out) options.out = *out;
      options.quiet = quiet;
      const ExperimentConfig config = load_config(config_path);
      const auto dir = resolve_output_dir(config, options, output_root());
      if (*generate) {
        cmd_generate(config, dir, options, std::cerr);
      } else {
        cmd_pipeline(config, dir, options, std::cerr);
      }
    } else if (*biasness) {
      std::ifstream in(csv_path);
      if (!in) throw FormatError("cannot open " + csv_path, 0);
      emit(cmd_biasness(read_label_pairs(in), rho, n_classes, eps), out);
    } else if (*curves) {
      if (grid.empty()) grid = default_rho_grid(curve_classes);
      emit(cmd_curves(grid, curve_classes, phi_step), out);
    }
  } catch (const ConfigError& e) {
    return report_error("config", e.what(), kConfig, {{"field", e.field()}});
  } catch (const FormatError& e) {
    return report_error("format", e.what(), kData, {{"offset", e.offset()}});
  } catch (const ParameterError& e) {
    return report_error("data", e.what(), kData);
  } catch (const RunError& e) {
    return report_error("run", e.what(), kRuntime, {{"epoch", e.epoch()}});
  } catch (const std::exception& e) {
    return report_error("runtime", e.what(), kRuntime);
  }
  return kOk;
}
