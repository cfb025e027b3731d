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

#include "uend/serialization.h"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "uend/error.h"

namespace uend {
namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) throw FormatError("matrix row count mismatch", 0);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = data[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != cols) throw FormatError("matrix column count mismatch", 0);
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json layer_to_json(const DenseLayer& layer) {
  return {{"activation", to_string(layer.activation)},
          {"weight", matrix_to_json(layer.weight)},
          {"bias", vector_to_json(layer.bias)}};
}

DenseLayer layer_from_json(const json& j) {
  DenseLayer layer;
  layer.activation = activation_from_string(j.at("activation").get<std::string>());
  layer.weight = matrix_from_json(j.at("weight"));
  layer.bias = vector_from_json(j.at("bias"));
  return layer;
}

json params_to_json(const ModelParams& p) {
  json encoder = json::array();
  for (const auto& layer : p.encoder) encoder.push_back(layer_to_json(layer));
  return {{"encoder", std::move(encoder)}, {"classifier", layer_to_json(p.classifier)}};
}

ModelParams params_from_json(const json& j) {
  ModelParams p;
  for (const auto& layer : j.at("encoder")) p.encoder.push_back(layer_from_json(layer));
  p.classifier = layer_from_json(j.at("classifier"));
  p.validate();
  return p;
}

void check_header(const json& j, const std::string& format, int version) {
  if (j.value("format", std::string{}) != format) {
    throw FormatError("expected a " + format + " document", 0);
  }
  if (j.value("version", 0) != version) {
    throw FormatError("unsupported " + format + " version", 0);
  }
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what(), e.byte);
  }
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
  json j = {{"format", "uend-checkpoint"},
            {"version", kCheckpointVersion},
            {"epoch", checkpoint.epoch},
            {"params", params_to_json(checkpoint.params)}};
  if (checkpoint.optimizer) {
    const OptimizerState& s = *checkpoint.optimizer;
    json opt = {{"kind", to_string(s.kind)},       {"learning_rate", s.learning_rate},
                {"weight_decay", s.weight_decay},  {"beta1", s.beta1},
                {"beta2", s.beta2},                {"epsilon", s.epsilon},
                {"step", s.step}};
    if (s.kind == OptimizerKind::kAdam) {
      opt["first_moment"] = params_to_json(s.first_moment);
      opt["second_moment"] = params_to_json(s.second_moment);
    }
    j["optimizer"] = std::move(opt);
  }
  return j.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const json j = parse(text);
  check_header(j, "uend-checkpoint", kCheckpointVersion);
  try {
    Checkpoint c;
    c.epoch = j.at("epoch").get<int>();
    c.params = params_from_json(j.at("params"));
    if (j.contains("optimizer")) {
      const json& o = j.at("optimizer");
      OptimizerState s;
      s.kind = optimizer_from_string(o.at("kind").get<std::string>());
      s.learning_rate = o.at("learning_rate").get<double>();
      s.weight_decay = o.at("weight_decay").get<double>();
      s.beta1 = o.at("beta1").get<double>();
      s.beta2 = o.at("beta2").get<double>();
      s.epsilon = o.at("epsilon").get<double>();
      s.step = o.at("step").get<long>();
      if (s.kind == OptimizerKind::kAdam) {
        s.first_moment = params_from_json(o.at("first_moment"));
        s.second_moment = params_from_json(o.at("second_moment"));
      }
      c.optimizer = std::move(s);
    }
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what(), 0);
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_text_file(path, checkpoint_to_json(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_text_file(path));
}

std::string predictor_to_json(const BiasPredictor& predictor) {
  const json j = {
      {"format", "uend-bias-predictor"},
      {"version", kPredictorVersion},
      {"pca",
       {{"mean", vector_to_json(predictor.pca.mean)},
        {"components", matrix_to_json(predictor.pca.components)},
        {"retained_variance", predictor.pca.retained_variance},
        {"degenerate", predictor.pca.degenerate}}},
      {"clusters",
       {{"k", predictor.clusters.k()},
        {"centroids", matrix_to_json(predictor.clusters.centroids)},
        {"inertia", predictor.clusters.inertia}}}};
  return j.dump();
}

BiasPredictor predictor_from_json(const std::string& text) {
  const json j = parse(text);
  check_header(j, "uend-bias-predictor", kPredictorVersion);
  try {
    BiasPredictor p;
    const json& pca = j.at("pca");
    p.pca.mean = vector_from_json(pca.at("mean"));
    p.pca.components = matrix_from_json(pca.at("components"));
    p.pca.retained_variance = pca.at("retained_variance").get<double>();
    p.pca.degenerate = pca.value("degenerate", false);
    const json& cl = j.at("clusters");
    p.clusters.centroids = matrix_from_json(cl.at("centroids"));
    p.clusters.inertia = cl.at("inertia").get<double>();
    if (cl.at("k").get<int>() != p.clusters.k() ||
        p.pca.components.cols() != p.pca.mean.size() ||
        p.clusters.centroids.cols() != p.pca.components.rows()) {
      throw FormatError("predictor dimensions do not compose", 0);
    }
    return p;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed predictor: ") + e.what(), 0);
  }
}

void save_predictor(const std::filesystem::path& path, const BiasPredictor& predictor) {
  write_text_file(path, predictor_to_json(predictor));
}

BiasPredictor load_predictor(const std::filesystem::path& path) {
  return predictor_from_json(read_text_file(path));
}

void write_pseudo_labels_csv(const std::filesystem::path& path, std::span<const int> labels) {
  std::ostringstream out;
  out << "index,pseudo_label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
  write_text_file(path, out.str());
}

std::string biasness_report_to_json(const BiasnessReport& report) {
  const json j = {{"rho", report.rho},
                  {"eps", report.eps},
                  {"phi_global", report.phi_global},
                  {"nmi_by", report.nmi_by},
                  {"nmi_perfect", report.nmi_perfect},
                  {"phi_cells", matrix_to_json(report.phi_cells).at("data")},
                  {"warnings", report.warnings}};
  return j.dump(2);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw ParameterError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace uend
