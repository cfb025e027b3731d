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

#include "experiment_config.h"

#include <cmath>
#include <set>

#include <json.hpp>

#include "uend/error.h"
#include "uend/serialization.h"

namespace uend::tools {
namespace {

using nlohmann::json;

// Walks one JSON object, remembering its path for error messages and which
// keys were consumed so that leftovers can be rejected.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(label(), "expected an object");
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key) && !node_.at(key).is_null();
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key), "wrong type");
    }
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(node_.at(key), field(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  void finish() const {
    for (const auto& item : node_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(field(item.key()), "unknown key");
    }
  }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

Activation read_activation(Section& s, const std::string& key, Activation fallback) {
  std::string name = to_string(fallback);
  s.read(key, name);
  try {
    return activation_from_string(name);
  } catch (const Error& e) {
    throw ConfigError(s.field(key), e.what());
  }
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

void parse_data(Section s, DataSection& d) {
  std::string source = "synthetic";
  s.read("source", source);
  if (source == "synthetic") {
    d.source = DataSource::kSynthetic;
  } else if (source == "idx") {
    d.source = DataSource::kIdx;
  } else {
    throw ConfigError(s.field("source"), "expected \"synthetic\" or \"idx\"");
  }
  s.read("rho", d.rho);
  if (s.has("rho_val")) {
    double v = 0.0;
    s.read("rho_val", v);
    d.rho_val = v;
  }
  s.read("rho_test", d.rho_test);
  s.read("n_train", d.n_train);
  s.read("n_val", d.n_val);
  s.read("n_test", d.n_test);
  if (s.has("synthetic")) {
    Section syn = s.child("synthetic");
    syn.read("n_classes", d.synthetic.n_classes);
    syn.read("dim_target", d.synthetic.dim_target);
    syn.read("dim_bias", d.synthetic.dim_bias);
    syn.read("noise_target", d.synthetic.noise_target);
    syn.read("noise_bias", d.synthetic.noise_bias);
    syn.read("malignant", d.synthetic.malignant);
    syn.finish();
  }
  if (s.has("idx")) {
    Section idx = s.child("idx");
    std::string p;
    auto path = [&](const char* key, std::filesystem::path& out) {
      p = out.string();
      idx.read(key, p);
      out = p;
    };
    path("train_images", d.idx.train_images);
    path("train_labels", d.idx.train_labels);
    path("test_images", d.idx.test_images);
    path("test_labels", d.idx.test_labels);
    idx.finish();
  }
  if (s.has("palette")) {
    std::vector<std::vector<int>> colors;
    s.read("palette", colors);
    d.palette.clear();
    for (const auto& c : colors) {
      require(c.size() == 3, s.field("palette"), "colors are [r, g, b] triples");
      for (int v : c) require(v >= 0 && v <= 255, s.field("palette"), "channel outside [0, 255]");
      d.palette.push_back({static_cast<std::uint8_t>(c[0]), static_cast<std::uint8_t>(c[1]),
                           static_cast<std::uint8_t>(c[2])});
    }
  }
  s.finish();
}

void parse_model(Section s, TrainConfig& t) {
  s.read("hidden", t.hidden);
  s.read("embedding_dim", t.embedding_dim);
  t.hidden_activation = read_activation(s, "hidden_activation", t.hidden_activation);
  t.embedding_activation = read_activation(s, "embedding_activation", t.embedding_activation);
  s.finish();
}

void parse_training(Section s, ExperimentConfig& c) {
  TrainConfig& t = c.training;
  s.read("epochs", t.epochs);
  s.read("batch_size", t.batch_size);
  if (s.has("optimizer")) {
    std::string name;
    s.read("optimizer", name);
    try {
      t.optimizer = optimizer_from_string(name);
    } catch (const Error& e) {
      throw ConfigError(s.field("optimizer"), e.what());
    }
  }
  s.read("learning_rate", t.learning_rate);
  s.read("weight_decay", t.weight_decay);
  s.read("seed", t.seed);
  s.read("snapshot_epochs", t.snapshot_epochs);
  s.read("repeats", c.repeats);
  s.finish();
}

void parse_search(Section s, SearchSection& q) {
  s.read("budget", q.budget);
  if (s.has("interval")) {
    std::vector<double> iv;
    s.read("interval", iv);
    require(iv.size() == 2, s.field("interval"), "expected [low, high]");
    q.low = iv[0];
    q.high = iv[1];
  }
  s.read("threads", q.threads);
  if (s.has("weights")) {
    std::vector<double> w;
    s.read("weights", w);
    require(w.size() == 2, s.field("weights"), "expected [alpha, beta]");
    q.fixed = EndWeights{w[0], w[1]};
  }
  s.finish();
}

void check_rho(double rho, const std::string& field) {
  require(rho > 0.0 && rho <= 1.0, field, "rho must lie in (0, 1]");
}

json activation_json(Activation a) { return to_string(a); }

}  // namespace

std::vector<int> ExperimentConfig::snapshot_epochs() const {
  if (!training.snapshot_epochs.empty()) return training.snapshot_epochs;
  const int early = std::max(1, static_cast<int>(std::lround(training.epochs / 8.0)));
  if (early == training.epochs) return {early};
  return {early, training.epochs};
}

void ExperimentConfig::validate() const {
  const DataSection& d = data;
  check_rho(d.rho, "data.rho");
  if (d.rho_val) check_rho(*d.rho_val, "data.rho_val");
  require(d.rho_test > 0.0 && d.rho_test < 1.0, "data.rho_test", "must lie in (0, 1)");
  require(d.n_val >= 1, "data.n_val", "must be >= 1");
  require(d.n_test >= 1, "data.n_test", "must be >= 1");
  if (d.source == DataSource::kSynthetic) {
    require(d.n_train >= 1, "data.n_train", "must be >= 1");
    BiasSpec spec = d.synthetic;
    spec.rho = d.rho;
    try {
      spec.validate();
    } catch (const ParameterError& e) {
      throw ConfigError("data.synthetic", e.what());
    }
    require(spec.n_classes >= 3, "data.synthetic.n_classes", "must be >= 3");
  } else {
    require(!d.idx.train_images.empty(), "data.idx.train_images", "path required");
    require(!d.idx.train_labels.empty(), "data.idx.train_labels", "path required");
    require(!d.idx.test_images.empty(), "data.idx.test_images", "path required");
    require(!d.idx.test_labels.empty(), "data.idx.test_labels", "path required");
    require(d.palette.size() >= 3, "data.palette", "needs at least 3 colors");
    require(std::set<Color>(d.palette.begin(), d.palette.end()).size() == d.palette.size(),
            "data.palette", "colors must be distinct");
  }

  const TrainConfig& t = training;
  require(t.epochs >= 1, "training.epochs", "must be >= 1");
  require(t.batch_size >= 2, "training.batch_size", "must be >= 2");
  require(t.learning_rate > 0.0, "training.learning_rate", "must be positive");
  require(t.weight_decay >= 0.0, "training.weight_decay", "must be nonnegative");
  for (int e : t.snapshot_epochs) {
    require(e >= 1 && e <= t.epochs, "training.snapshot_epochs", "entries must lie in [1, epochs]");
  }
  require(repeats >= 1, "training.repeats", "must be >= 1");
  require(!t.hidden.empty(), "model.hidden", "needs at least one hidden layer");
  for (int w : t.hidden) require(w >= 1, "model.hidden", "widths must be >= 1");
  require(t.embedding_dim >= 1, "model.embedding_dim", "must be >= 1");

  require(search.budget >= 1, "search.budget", "must be >= 1");
  require(search.low > 0.0 && search.high > search.low, "search.interval",
          "must satisfy 0 < low < high");
  require(search.threads >= 1, "search.threads", "must be >= 1");
  if (search.fixed) {
    require(search.fixed->alpha >= 0.0 && search.fixed->beta >= 0.0, "search.weights",
            "must be nonnegative");
  }
  require(!output_dir.empty(), "output.dir", "must not be empty");
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section s(root, "");
  if (s.has("data")) parse_data(s.child("data"), c.data);
  if (s.has("model")) parse_model(s.child("model"), c.training);
  if (s.has("training")) parse_training(s.child("training"), c);
  if (s.has("search")) parse_search(s.child("search"), c.search);
  if (s.has("output")) {
    Section out = s.child("output");
    std::string dir = c.output_dir.string();
    out.read("dir", dir);
    c.output_dir = dir;
    out.finish();
  }
  s.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const FormatError&) {
    throw ConfigError("<file>", "cannot read " + path.string());
  }
  return parse_config(text);
}

std::string config_to_json(const ExperimentConfig& c) {
  const DataSection& d = c.data;
  json palette = json::array();
  for (const Color& col : d.palette) palette.push_back({col[0], col[1], col[2]});
  json data = {
      {"source", d.source == DataSource::kSynthetic ? "synthetic" : "idx"},
      {"rho", d.rho},
      {"rho_test", d.rho_test},
      {"n_train", d.n_train},
      {"n_val", d.n_val},
      {"n_test", d.n_test},
      {"synthetic",
       {{"n_classes", d.synthetic.n_classes},
        {"dim_target", d.synthetic.dim_target},
        {"dim_bias", d.synthetic.dim_bias},
        {"noise_target", d.synthetic.noise_target},
        {"noise_bias", d.synthetic.noise_bias},
        {"malignant", d.synthetic.malignant}}},
      {"idx",
       {{"train_images", d.idx.train_images.string()},
        {"train_labels", d.idx.train_labels.string()},
        {"test_images", d.idx.test_images.string()},
        {"test_labels", d.idx.test_labels.string()}}},
      {"palette", palette}};
  data["rho_val"] = d.rho_val ? json(*d.rho_val) : json(nullptr);
  const TrainConfig& t = c.training;
  json search = {{"budget", c.search.budget},
                 {"interval", {c.search.low, c.search.high}},
                 {"threads", c.search.threads}};
  search["weights"] = c.search.fixed ? json({c.search.fixed->alpha, c.search.fixed->beta})
                                     : json(nullptr);
  const json root = {
      {"data", data},
      {"model",
       {{"hidden", t.hidden},
        {"embedding_dim", t.embedding_dim},
        {"hidden_activation", activation_json(t.hidden_activation)},
        {"embedding_activation", activation_json(t.embedding_activation)}}},
      {"training",
       {{"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"optimizer", to_string(t.optimizer)},
        {"learning_rate", t.learning_rate},
        {"weight_decay", t.weight_decay},
        {"seed", t.seed},
        {"snapshot_epochs", c.snapshot_epochs()},
        {"repeats", c.repeats}}},
      {"search", search},
      {"output", {{"dir", c.output_dir.string()}}}};
  return root.dump(2) + "\n";
}

RunData build_datasets(const DataSection& d, std::uint64_t seed) {
  Rng rng(seed);
  RunData out;
  const std::size_t pool_size = d.n_train + d.n_val;
  // ceil(fraction * n) must land exactly on n_val.
  auto fraction_of = [&d](std::size_t n) {
    return (static_cast<double>(d.n_val) - 0.5) / static_cast<double>(n);
  };
  if (d.source == DataSource::kSynthetic) {
    BiasSpec spec = d.synthetic;
    spec.rho = d.rho;
    spec.seed = seed;
    const Dataset pool = generate_synthetic(spec, pool_size, rng);
    Split split = make_validation_split(pool, fraction_of(pool.size()), d.rho_val, synthetic_rebias(spec, pool), rng);
    out.train = std::move(split.train);
    out.val = std::move(split.val);
    BiasSpec test_spec = spec;
    test_spec.rho = d.rho_test;
    out.test = generate_synthetic(test_spec, d.n_test, rng);
    return out;
  }

  IdxData train_raw = load_idx(d.idx.train_images, d.idx.train_labels);
  IdxData test_raw = load_idx(d.idx.test_images, d.idx.test_labels);
  const int n_t = static_cast<int>(d.palette.size());
  auto trim = [n_t](IdxData& raw, std::size_t n, const char* what) {
    for (int label : raw.labels) {
      if (label < 0 || label >= n_t) {
        throw ParameterError(std::string(what) + " labels exceed the palette size");
      }
    }
    if (n > 0 && n < raw.images.size()) {
      raw.images.pixels.resize(n);
      raw.labels.resize(n);
    }
  };
  trim(train_raw, pool_size, "train");
  trim(test_raw, d.n_test, "test");
  const Dataset pool = colorize(train_raw.images, train_raw.labels, d.rho, d.palette, rng);
  Split split = make_validation_split(pool, fraction_of(pool.size()), d.rho_val,
                                      image_rebias(train_raw.images, d.palette), rng);
  out.train = std::move(split.train);
  out.val = std::move(split.val);
  out.test = colorize(test_raw.images, test_raw.labels, d.rho_test, d.palette, rng);
  return out;
}

}  // namespace uend::tools
