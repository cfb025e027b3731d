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

#include "commands.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "uend/biasness.h"
#include "uend/serialization.h"

namespace uend::tools {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : ""; }

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// Records every file written so the manifest can checksum them.
class RunWriter {
 public:
  explicit RunWriter(fs::path root) : root_(std::move(root)) {}

  void write(const fs::path& relative, const std::string& text) {
    const fs::path full = root_ / relative;
    make_dirs(full.parent_path());
    try {
      write_text_file(full, text);
    } catch (const ParameterError& e) {
      throw IoError(e.what());
    }
    files_[relative.generic_string()] = text;
  }

  json manifest_files() const {
    json out = json::array();
    for (const auto& [path, text] : files_) {
      out.push_back({{"path", path}, {"bytes", text.size()}, {"fnv1a64", fnv1a_hex(text)}});
    }
    return out;
  }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::map<std::string, std::string> files_;
};

std::string epochs_csv(const RunReport& report) {
  std::ostringstream out;
  out << "epoch,train_loss,train_penalty,train_accuracy,val_accuracy,test_accuracy,bias_accuracy\n";
  for (const EpochRecord& r : report.epochs) {
    out << r.epoch << ',' << num(r.train_loss) << ',' << num(r.train_penalty) << ','
        << num(r.train_accuracy) << ',' << num(r.val_accuracy) << ',' << opt_num(r.test_accuracy)
        << ',' << opt_num(r.bias_accuracy) << '\n';
  }
  return out.str();
}

std::string trials_csv(const std::vector<Trial>& trials) {
  std::ostringstream out;
  out << "index,alpha,beta,val_accuracy,test_accuracy\n";
  for (const Trial& t : trials) {
    out << t.index << ',' << num(t.weights.alpha) << ',' << num(t.weights.beta) << ','
        << num(t.val_accuracy) << ',' << opt_num(t.test_accuracy) << '\n';
  }
  return out.str();
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out << "epoch,phi,nmi_by,nmi_perfect\n";
  for (const CurvePoint& p : curve) {
    out << p.epoch << ',' << num(p.phi) << ',' << num(p.report.nmi_by) << ','
        << num(p.report.nmi_perfect) << '\n';
  }
  return out.str();
}

json per_class_json(const std::vector<double>& per_class) {
  json out = json::array();
  for (double v : per_class) out.push_back(std::isnan(v) ? json(nullptr) : json(v));
  return out;
}

double mean_of(const json& runs, const char* key) {
  double sum = 0.0;
  for (const auto& r : runs) sum += r.at(key).get<double>();
  return sum / static_cast<double>(runs.size());
}

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

json run_one(const ExperimentConfig& config, std::uint64_t seed, Phase phase, RunWriter& writer,
             std::ostream& log, bool quiet) {
  const std::string tag = seed_tag(seed);
  const RunData data = build_datasets(config.data, seed);
  const std::vector<int> snapshot_epochs = config.snapshot_epochs();

  TrainConfig train_cfg = config.training;
  train_cfg.seed = seed;
  train_cfg.train_rho = config.data.rho;
  train_cfg.search_budget = config.search.budget;
  train_cfg.search_low = config.search.low;
  train_cfg.search_high = config.search.high;
  train_cfg.search_threads = config.search.threads;
  // Every epoch is kept in memory for the biasness curve; only the
  // configured ones are written out.
  train_cfg.snapshot_epochs.resize(static_cast<std::size_t>(train_cfg.epochs));
  std::iota(train_cfg.snapshot_epochs.begin(), train_cfg.snapshot_epochs.end(), 1);
  const Monitor monitor{&data.test};

  json run = {{"seed", seed},
              {"n_train", data.train.size()},
              {"n_val", data.val.size()},
              {"n_test", data.test.size()}};

  // Phase 1: bias-capturing model.
  if (!quiet) log << "[" << tag << "] phase 1: vanilla training\n";
  VanillaResult vanilla = train_vanilla(train_cfg, data.train, data.val, monitor);
  for (int e : snapshot_epochs) {
    writer.write("checkpoints/vanilla_" + tag + "_epoch" + std::to_string(e) + ".json",
                 checkpoint_to_json({vanilla.snapshots.at(e), std::nullopt, e}));
  }
  writer.write("reports/vanilla_" + tag + "_epochs.csv", epochs_csv(vanilla.report));
  const Evaluation vanilla_eval = evaluate(vanilla.params, data.test);
  run["vanilla_val_accuracy"] = vanilla.report.val_accuracy;
  run["vanilla_test_accuracy"] = vanilla_eval.accuracy;
  run["vanilla_per_class"] = per_class_json(vanilla_eval.per_class);
  if (!quiet) log << "[" << tag << "] vanilla test accuracy " << vanilla_eval.accuracy << "\n";

  // Biasness of the vanilla model over training, on the test set.
  const std::vector<CurvePoint> curve =
      biasness_curve(vanilla.snapshots, data.test, config.data.rho_test);
  writer.write("reports/biasness_" + tag + ".csv", curve_csv(curve));
  json phi = json::array();
  for (const CurvePoint& p : curve) phi.push_back({{"epoch", p.epoch}, {"phi", p.phi}});
  run["phi_curve"] = std::move(phi);
  if (phase == Phase::kSnapshots) return run;

  // Phase 2: bias predictor and pseudo-labels per snapshot.
  std::map<int, PredictorResult> predictors;
  json snapshots = json::array();
  for (int e : snapshot_epochs) {
    if (!quiet) log << "[" << tag << "] phase 2: clustering snapshot " << e << "\n";
    PredictorResult pr = fit_bias_predictor(vanilla.snapshots.at(e), data.train, data.val, seed);
    const std::string stem = tag + "_T" + std::to_string(e);
    writer.write("checkpoints/predictor_" + stem + ".json", predictor_to_json(pr.predictor));
    std::ostringstream labels;
    labels << "index,pseudo_label\n";
    for (std::size_t i = 0; i < pr.train.data.size(); ++i) labels << i << ',' << (*pr.train.data.bias)[i] << '\n';
    writer.write("reports/pseudo_labels_" + stem + ".csv", labels.str());
    const int n = std::max(pr.predictor.k(), data.train.n_biases);
    json s = {{"epoch", e},
              {"k", pr.predictor.k()},
              {"pca_components", pr.predictor.pca.n_components()},
              {"pseudo_label_accuracy",
               bias_pseudo_accuracy(*pr.train.data.bias, pr.train.hidden_bias, n)}};
    json scores = json::array();
    for (const auto& [k, score] : pr.selection.scores) scores.push_back({{"k", k}, {"silhouette", score}});
    s["silhouette"] = std::move(scores);
    s["warnings"] = pr.selection.warnings;
    snapshots.push_back(std::move(s));
    predictors.emplace(e, std::move(pr));
  }
  if (phase == Phase::kPseudoLabels) {
    run["snapshots"] = std::move(snapshots);
    return run;
  }

  // Phase 3: debiased training on the pseudo-labels. The training set seen
  // here carries pseudo-labels only; ground truth stays in hidden_bias.
  TrainConfig debias_cfg = train_cfg;
  debias_cfg.snapshot_epochs.clear();
  for (std::size_t i = 0; i < snapshot_epochs.size(); ++i) {
    const int e = snapshot_epochs[i];
    const std::string stem = tag + "_T" + std::to_string(e);
    const Dataset& pseudo = predictors.at(e).train.data;
    if (!quiet) log << "[" << tag << "] phase 3: debiasing with T=" << e << " pseudo-labels\n";
    DebiasedResult best;
    if (config.search.fixed) {
      best = train_debiased(debias_cfg, pseudo, data.val, *config.search.fixed, monitor);
    } else {
      Rng search_rng(seed * 1000003ULL + static_cast<std::uint64_t>(e));
      SearchResult sr = search_hyperparams(debias_cfg, pseudo, data.val, config.search.budget,
                                           {config.search.low, config.search.high}, search_rng,
                                           monitor);
      writer.write("reports/trials_" + stem + ".csv", trials_csv(sr.trials));
      best = std::move(sr.best_run);
    }
    writer.write("checkpoints/debiased_" + stem + ".json",
                 checkpoint_to_json({best.params, std::nullopt, config.training.epochs}));
    writer.write("reports/debiased_" + stem + "_epochs.csv", epochs_csv(best.report));
    const Evaluation eval = evaluate(best.params, data.test);
    json& s = snapshots[i];
    s["alpha"] = best.report.chosen.alpha;
    s["beta"] = best.report.chosen.beta;
    s["debiased_val_accuracy"] = best.report.val_accuracy;
    s["debiased_test_accuracy"] = eval.accuracy;
    s["debiased_per_class"] = per_class_json(eval.per_class);
    if (!quiet) {
      log << "[" << tag << "] U-EnD T=" << e << " test accuracy " << eval.accuracy << " (alpha "
          << best.report.chosen.alpha << ", beta " << best.report.chosen.beta << ")\n";
    }
  }
  run["snapshots"] = std::move(snapshots);
  return run;
}

int parse_int(const std::string& field, int line) {
  int v = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ParameterError("line " + std::to_string(line) + ": not an integer: '" + field + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) {
    cur.erase(0, cur.find_first_not_of(" \t\r"));
    cur.erase(cur.find_last_not_of(" \t\r") + 1);
    out.push_back(cur);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Phase parse_phase(const std::string& text) {
  if (text == "1") return Phase::kSnapshots;
  if (text == "2") return Phase::kPseudoLabels;
  if (text == "3" || text == "all") return Phase::kAll;
  throw ConfigError("--phase", "expected 1, 2, 3 or all");
}

fs::path resolve_output_dir(const ExperimentConfig& config, const Options& options,
                            const std::optional<fs::path>& output_root) {
  if (options.out) return *options.out;
  if (config.output_dir.is_relative() && output_root) return *output_root / config.output_dir;
  return config.output_dir;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void cmd_generate(const ExperimentConfig& config, const fs::path& dir, const Options& options,
                  std::ostream& log) {
  const std::uint64_t seed = options.seed.value_or(config.training.seed);
  const RunData data = build_datasets(config.data, seed);
  make_dirs(dir / "data");
  try {
    write_dataset_csv(dir / "data" / "train.csv", data.train);
    write_dataset_csv(dir / "data" / "val.csv", data.val);
    write_dataset_csv(dir / "data" / "test.csv", data.test);
  } catch (const ParameterError& e) {
    throw IoError(e.what());
  }
  if (!options.quiet) {
    log << "wrote " << data.train.size() << " train, " << data.val.size() << " val, "
        << data.test.size() << " test samples to " << (dir / "data").string() << "\n";
  }
}

void cmd_pipeline(const ExperimentConfig& config, const fs::path& dir, const Options& options,
                  std::ostream& log) {
  config.validate();
  const std::uint64_t base_seed = options.seed.value_or(config.training.seed);
  ExperimentConfig effective = config;
  effective.training.seed = base_seed;
  effective.output_dir = dir;
  RunWriter writer(dir);
  writer.write("config.json", config_to_json(effective));

  json runs = json::array();
  for (int r = 0; r < config.repeats; ++r) {
    runs.push_back(run_one(effective, base_seed + static_cast<std::uint64_t>(r), options.phase,
                           writer, log, options.quiet));
  }

  json summary = {{"repeats", config.repeats},
                  {"vanilla_test_accuracy", mean_of(runs, "vanilla_test_accuracy")}};
  if (options.phase != Phase::kSnapshots) {
    json per_snapshot = json::array();
    const std::size_t n_snap = runs[0].at("snapshots").size();
    for (std::size_t i = 0; i < n_snap; ++i) {
      json s = {{"epoch", runs[0]["snapshots"][i]["epoch"]}};
      for (const char* key : {"pseudo_label_accuracy", "debiased_test_accuracy"}) {
        if (!runs[0]["snapshots"][i].contains(key)) continue;
        double sum = 0.0;
        for (const auto& run : runs) sum += run["snapshots"][i][key].get<double>();
        s[key] = sum / static_cast<double>(runs.size());
      }
      per_snapshot.push_back(std::move(s));
    }
    summary["snapshots"] = std::move(per_snapshot);
  }
  writer.write("reports/summary.json", json({{"summary", summary}, {"runs", runs}}).dump(2) + "\n");

  const std::string phase_name = options.phase == Phase::kSnapshots      ? "1"
                                 : options.phase == Phase::kPseudoLabels ? "2"
                                                                          : "all";
  const json manifest = {{"format", "uend-run-manifest"},
                         {"version", 1},
                         {"phase", phase_name},
                         {"seed", base_seed},
                         {"summary", summary},
                         {"runs", runs},
                         {"files", writer.manifest_files()}};
  const std::string text = manifest.dump(2) + "\n";
  try {
    write_text_file(dir / "manifest.json", text);
  } catch (const ParameterError& e) {
    throw IoError(e.what());
  }
  if (!options.quiet) log << "manifest written to " << (dir / "manifest.json").string() << "\n";
}

LabelPairs read_label_pairs(std::istream& in) {
  LabelPairs out;
  std::string line;
  int line_no = 0;
  int bias_col = -1;
  int pred_col = -1;
  std::size_t n_cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_csv(line);
    if (bias_col < 0) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "bias") bias_col = static_cast<int>(i);
        if (fields[i] == "prediction") pred_col = static_cast<int>(i);
      }
      if (bias_col < 0 || pred_col < 0) {
        throw ParameterError("line " + std::to_string(line_no) +
                             ": header needs 'bias' and 'prediction' columns");
      }
      n_cols = fields.size();
      continue;
    }
    if (fields.size() != n_cols) {
      throw ParameterError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(n_cols) + " fields, got " +
                           std::to_string(fields.size()));
    }
    out.bias.push_back(parse_int(fields[static_cast<std::size_t>(bias_col)], line_no));
    out.prediction.push_back(parse_int(fields[static_cast<std::size_t>(pred_col)], line_no));
    if (out.bias.back() < 0 || out.prediction.back() < 0) {
      throw ParameterError("line " + std::to_string(line_no) + ": negative label");
    }
  }
  if (out.bias.empty()) throw ParameterError("no (bias, prediction) rows");
  return out;
}

std::string cmd_biasness(const LabelPairs& pairs, double rho, std::optional<int> n_t, double eps) {
  int n = 0;
  if (n_t) {
    n = *n_t;
  } else {
    for (std::size_t i = 0; i < pairs.bias.size(); ++i) {
      n = std::max({n, pairs.bias[i] + 1, pairs.prediction[i] + 1});
    }
    n = std::max(n, 3);
  }
  const JointBY joint = empirical_joint(pairs.bias, pairs.prediction, n);
  return biasness_report_to_json(estimate_phi(joint, rho, eps)) + "\n";
}

std::string cmd_curves(const std::vector<double>& rho_grid, int n_t, double phi_step) {
  if (!(phi_step > 0.0 && phi_step <= 1.0)) throw ParameterError("phi step must lie in (0, 1]");
  if (rho_grid.empty()) throw ParameterError("empty rho grid");
  const int steps = static_cast<int>(std::lround(1.0 / phi_step));
  std::ostringstream out;
  out << "rho,phi,nmi_perfect,nmi_by\n";
  for (double rho : rho_grid) {
    if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("rho grid values must lie in (0, 1)");
    const double perfect = nmi_perfect(rho, n_t);
    for (int k = 0; k <= steps; ++k) {
      const double phi = std::min(1.0, k * phi_step);
      out << num(rho) << ',' << num(phi) << ',' << num(perfect) << ','
          << num(nmi_by({rho, phi, 0.0, n_t})) << '\n';
    }
  }
  return out.str();
}

std::vector<double> default_rho_grid(int n_t) {
  std::vector<double> grid = {1.0 / n_t};
  for (int k = 2; k <= 9; ++k) {
    const double v = k / 10.0;
    if (v > 1.0 / n_t) grid.push_back(v);
  }
  for (double v : {0.95, 0.99, 0.999}) grid.push_back(v);
  return grid;
}

}  // namespace uend::tools
