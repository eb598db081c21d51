// Copyright 2026 The emogen Authors.
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

// Run manifests: one INI file describing the model, the training plan, the
// decoder, the tasks and the variants of an experiment matrix.
//
//   [run]           seed, output
//   [model]         d_model, n_heads, encoder_layers, decoder_layers, d_ff, max_len, dropout
//   [train]         batch_size, epochs, label_smoothing, learning_rate, beta1, beta2, adam_eps,
//                   weight_decay, grad_clip, min_count, keep_epoch_checkpoints
//   [decode]        beams, no_repeat_ngram, length_penalty, max_len, eval_limit
//   [task.NAME]     kind, labels | labels_file, weight, data | train+valid+test, split_seed,
//                   subsample, subsample_stage, subsample_seed
//   [variant.NAME]  tasks, weights
//
// Relative paths are resolved against the manifest's directory.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "emogen/data/dataset.hpp"
#include "emogen/decoding/beam_search.hpp"
#include "emogen/errors.hpp"
#include "emogen/model/checkpoint.hpp"
#include "emogen/model/config.hpp"
#include "emogen/trainer/trainer.hpp"

namespace emogen {

inline constexpr std::string_view kVersion = "0.1.0";

/// One row of an experiment matrix: a subset of tasks and their weights.
struct VariantSpec {
  std::string name;
  std::vector<std::string> tasks;
  std::map<std::string, double> weights;  // overrides the task defaults
};

struct RunManifest {
  std::filesystem::path base_dir;
  std::uint64_t seed = 0;
  std::filesystem::path output;
  ModelConfig model;  // vocab_size and heads are filled in once the data is loaded
  TrainPlan plan;
  std::size_t min_count = 1;
  bool keep_epoch_checkpoints = false;
  BeamConfig beam;
  /// Cap on generation test examples decoded during evaluation; 0 = all.
  std::size_t eval_limit = 0;
  std::vector<TaskSpec> tasks;
  std::vector<VariantSpec> variants;

  const TaskSpec& task(std::string_view name) const {
    for (const auto& t : tasks) {
      if (t.name == name) return t;
    }
    throw ConfigError("manifest: unknown task '" + std::string(name) + "'");
  }

  const TaskSpec& generation_task() const {
    for (const auto& t : tasks) {
      if (t.kind == TaskKind::kGeneration) return t;
    }
    throw ConfigError("manifest: no generation task");
  }

  /// Task specs of `variant` with its weights applied, in manifest order.
  std::vector<TaskSpec> variant_tasks(const VariantSpec& variant) const {
    std::vector<TaskSpec> out;
    for (const auto& t : tasks) {
      if (std::find(variant.tasks.begin(), variant.tasks.end(), t.name) == variant.tasks.end()) continue;
      TaskSpec s = t;
      if (auto it = variant.weights.find(t.name); it != variant.weights.end()) s.weight = it->second;
      out.push_back(std::move(s));
    }
    return out;
  }

  LabelSets label_sets() const {
    LabelSets out;
    for (const auto& t : tasks) {
      if (t.kind == TaskKind::kClassification) out[t.name] = t.labels;
    }
    return out;
  }

  std::vector<ClsHeadSpec> heads() const {
    std::vector<ClsHeadSpec> out;
    for (const auto& t : tasks) {
      if (t.kind == TaskKind::kClassification) out.push_back({t.name, t.labels.size()});
    }
    return out;
  }

  void validate() const;
};

namespace detail {

using Ptree = boost::property_tree::ptree;

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// Reads typed keys from one section and rejects keys nobody asked for.
class Section {
 public:
  Section(std::string name, const Ptree* tree) : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (tree_ == nullptr) return std::nullopt;
    auto child = tree_->get_child_optional(Ptree::path_type(key, '\0'));
    if (!child) return std::nullopt;
    return child->data();
  }

  std::string str(const std::string& key, std::string fallback) { return raw(key).value_or(std::move(fallback)); }

  template <class T>
  T num(const std::string& key, T fallback) {
    auto v = raw(key);
    if (!v) return fallback;
    std::istringstream is(*v);
    T out{};
    is >> out;
    if (is.fail() || !(is >> std::ws).eof()) {
      throw ConfigError("manifest: [" + name_ + "] " + key + " = '" + *v + "' is not a valid number");
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (v->find('-') != std::string::npos) {
        throw ConfigError("manifest: [" + name_ + "] " + key + " must not be negative");
      }
    }
    return out;
  }

  bool flag(const std::string& key, bool fallback) {
    auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("manifest: [" + name_ + "] " + key + " = '" + *v + "' is not a boolean");
  }

  void finish() const {
    if (tree_ == nullptr) return;
    for (const auto& [key, value] : *tree_) {
      if (!used_.count(key)) throw ConfigError("manifest: unknown key '" + key + "' in [" + name_ + "]");
    }
  }

 private:
  std::string name_;
  const Ptree* tree_;
  std::set<std::string> used_;
};

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

inline TaskSpec parse_task(const std::string& name, const Ptree& tree, const std::filesystem::path& base,
                           std::uint64_t run_seed) {
  Section s("task." + name, &tree);
  TaskSpec t;
  t.name = name;
  const std::string kind = s.str("kind", "");
  if (kind == "generation") {
    t.kind = TaskKind::kGeneration;
  } else if (kind == "classification") {
    t.kind = TaskKind::kClassification;
  } else {
    throw ConfigError("manifest: [task." + name + "] kind must be 'generation' or 'classification'");
  }
  if (auto labels = s.raw("labels")) t.labels = split_list(*labels);
  if (auto file = s.raw("labels_file")) {
    if (!t.labels.empty()) throw ConfigError("manifest: [task." + name + "] give labels or labels_file, not both");
    t.labels = read_label_file(resolve(base, *file));
  }
  t.weight = s.num<double>("weight", 1.0);
  t.data = resolve(base, s.str("data", ""));
  t.train = resolve(base, s.str("train", ""));
  t.valid = resolve(base, s.str("valid", ""));
  t.test = resolve(base, s.str("test", ""));
  t.split_seed = s.num<std::uint64_t>("split_seed", run_seed);
  t.subsample_fraction = s.num<double>("subsample", 1.0);
  const std::string stage = s.str("subsample_stage", "train");
  if (stage == "train") {
    t.subsample_stage = SubsampleStage::kTrain;
  } else if (stage == "total") {
    t.subsample_stage = SubsampleStage::kTotal;
  } else {
    throw ConfigError("manifest: [task." + name + "] subsample_stage must be 'train' or 'total'");
  }
  t.subsample_seed = s.num<std::uint64_t>("subsample_seed", run_seed);
  s.finish();
  return t;
}

inline VariantSpec parse_variant(const std::string& name, const Ptree& tree) {
  Section s("variant." + name, &tree);
  VariantSpec v;
  v.name = name;
  v.tasks = split_list(s.str("tasks", ""));
  for (const auto& item : split_list(s.str("weights", ""))) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("manifest: [variant." + name + "] weights entries look like task=value, got '" + item + "'");
    }
    const std::string task = item.substr(0, eq);
    char* end = nullptr;
    const std::string value = item.substr(eq + 1);
    const double w = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0') throw ConfigError("manifest: [variant." + name + "] bad weight '" + item + "'");
    if (!v.weights.emplace(task, w).second) {
      throw ConfigError("manifest: [variant." + name + "] weight for '" + task + "' given twice");
    }
  }
  s.finish();
  return v;
}

}  // namespace detail

inline void RunManifest::validate() const {
  if (tasks.empty()) throw ConfigError("manifest: no [task.*] sections");
  std::size_t generation = 0;
  std::set<std::string> names;
  for (const auto& t : tasks) {
    t.validate();
    if (!names.insert(t.name).second) throw ConfigError("manifest: duplicate task '" + t.name + "'");
    generation += t.kind == TaskKind::kGeneration;
    for (const auto& p : {t.data, t.train, t.valid, t.test}) {
      if (!p.empty() && !std::filesystem::exists(p)) {
        throw ConfigError("manifest: task '" + t.name + "': file " + p.string() + " does not exist");
      }
    }
  }
  if (generation != 1) throw ConfigError("manifest: exactly one generation task is required");
  std::set<std::string> variant_names;
  for (const auto& v : variants) {
    if (!variant_names.insert(v.name).second) throw ConfigError("manifest: duplicate variant '" + v.name + "'");
    std::set<std::string> listed;
    bool has_generation = false;
    for (const auto& name : v.tasks) {
      if (!listed.insert(name).second) throw ConfigError("variant '" + v.name + "': task '" + name + "' listed twice");
      has_generation |= task(name).kind == TaskKind::kGeneration;
    }
    if (!has_generation) throw ConfigError("variant '" + v.name + "': the generation task must be included");
    for (const auto& [name, w] : v.weights) {
      if (!listed.count(name)) throw ConfigError("variant '" + v.name + "': weight for unlisted task '" + name + "'");
    }
    for (const auto& t : variant_tasks(v)) t.validate();
  }
  model.validate();
  plan.validate_settings();
  beam.validate();
}

inline RunManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  detail::Ptree root;
  try {
    std::istringstream is(text);
    boost::property_tree::ini_parser::read_ini(is, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("manifest: line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunManifest m;
  m.base_dir = base_dir;
  auto section = [&](const std::string& name) {
    auto child = root.get_child_optional(detail::Ptree::path_type(name, '\0'));
    return detail::Section(name, child ? &*child : nullptr);
  };

  auto run = section("run");
  m.seed = run.num<std::uint64_t>("seed", 0);
  m.output = detail::resolve(base_dir, run.str("output", "runs"));
  run.finish();

  auto model = section("model");
  m.model.d_model = model.num<std::size_t>("d_model", m.model.d_model);
  m.model.n_heads = model.num<std::size_t>("n_heads", m.model.n_heads);
  m.model.n_enc_layers = model.num<std::size_t>("encoder_layers", m.model.n_enc_layers);
  m.model.n_dec_layers = model.num<std::size_t>("decoder_layers", m.model.n_dec_layers);
  m.model.d_ff = model.num<std::size_t>("d_ff", m.model.d_ff);
  m.model.max_len = model.num<std::size_t>("max_len", m.model.max_len);
  m.model.dropout = model.num<double>("dropout", m.model.dropout);
  model.finish();

  auto train = section("train");
  m.plan.seed = m.seed;
  m.plan.max_len = m.model.max_len;
  m.plan.batch_size = train.num<std::size_t>("batch_size", m.plan.batch_size);
  m.plan.epochs = train.num<std::size_t>("epochs", m.plan.epochs);
  m.plan.label_smoothing = train.num<double>("label_smoothing", m.plan.label_smoothing);
  m.plan.optimizer.learning_rate = train.num<double>("learning_rate", m.plan.optimizer.learning_rate);
  m.plan.optimizer.beta1 = train.num<double>("beta1", m.plan.optimizer.beta1);
  m.plan.optimizer.beta2 = train.num<double>("beta2", m.plan.optimizer.beta2);
  m.plan.optimizer.epsilon = train.num<double>("adam_eps", m.plan.optimizer.epsilon);
  m.plan.optimizer.weight_decay = train.num<double>("weight_decay", m.plan.optimizer.weight_decay);
  m.plan.grad_clip = train.num<double>("grad_clip", m.plan.grad_clip);
  m.min_count = train.num<std::size_t>("min_count", m.min_count);
  m.keep_epoch_checkpoints = train.flag("keep_epoch_checkpoints", false);
  train.finish();

  auto decode = section("decode");
  m.beam.beam_width = decode.num<std::size_t>("beams", m.beam.beam_width);
  m.beam.no_repeat_ngram = decode.num<std::size_t>("no_repeat_ngram", m.beam.no_repeat_ngram);
  m.beam.length_penalty = decode.num<double>("length_penalty", m.beam.length_penalty);
  m.beam.max_len = decode.num<std::size_t>("max_len", m.model.max_len);
  m.eval_limit = decode.num<std::size_t>("eval_limit", 0);
  decode.finish();

  const std::set<std::string> known{"run", "model", "train", "decode"};
  for (const auto& [key, tree] : root) {
    if (key.rfind("task.", 0) == 0) {
      m.tasks.push_back(detail::parse_task(key.substr(5), tree, base_dir, m.seed));
    } else if (key.rfind("variant.", 0) == 0) {
      m.variants.push_back(detail::parse_variant(key.substr(8), tree));
    } else if (!known.count(key)) {
      throw ConfigError("manifest: unknown section [" + key + "]");
    }
  }
  m.model.cls_heads = m.heads();
  m.model.vocab_size = kNumReserved + 1;  // placeholder until the vocab is built
  m.validate();
  return m;
}

inline RunManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open manifest " + path.string());
  std::ostringstream text;
  text << is.rdbuf();
  return parse_manifest(text.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

/// Resolved manifest as JSON. Paths are written relative to the manifest
/// directory so the echo does not depend on where the run happened.
inline nlohmann::ordered_json manifest_echo(const RunManifest& m) {
  auto rel = [&](const std::filesystem::path& p) -> std::string {
    if (p.empty()) return "";
    return p.lexically_relative(m.base_dir).generic_string();
  };
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["seed"] = m.seed;
  j["output"] = rel(m.output);
  j["model"] = {{"d_model", m.model.d_model},       {"n_heads", m.model.n_heads},
                {"encoder_layers", m.model.n_enc_layers}, {"decoder_layers", m.model.n_dec_layers},
                {"d_ff", m.model.d_ff},             {"max_len", m.model.max_len},
                {"dropout", m.model.dropout}};
  const auto& o = m.plan.optimizer;
  j["train"] = {{"batch_size", m.plan.batch_size},
                {"epochs", m.plan.epochs},
                {"label_smoothing", m.plan.label_smoothing},
                {"learning_rate", o.learning_rate},
                {"beta1", o.beta1},
                {"beta2", o.beta2},
                {"adam_eps", o.epsilon},
                {"weight_decay", o.weight_decay},
                {"grad_clip", m.plan.grad_clip},
                {"min_count", m.min_count},
                {"keep_epoch_checkpoints", m.keep_epoch_checkpoints}};
  j["decode"] = {{"beams", m.beam.beam_width},
                 {"no_repeat_ngram", m.beam.no_repeat_ngram},
                 {"length_penalty", m.beam.length_penalty},
                 {"max_len", m.beam.max_len},
                 {"eval_limit", m.eval_limit}};
  j["tasks"] = nlohmann::ordered_json::array();
  for (const auto& t : m.tasks) {
    nlohmann::ordered_json tj;
    tj["name"] = t.name;
    tj["kind"] = t.kind == TaskKind::kGeneration ? "generation" : "classification";
    if (!t.labels.empty()) tj["labels"] = t.labels;
    tj["weight"] = t.weight;
    if (!t.data.empty()) tj["data"] = rel(t.data);
    if (!t.train.empty()) {
      tj["train"] = rel(t.train);
      tj["valid"] = rel(t.valid);
      tj["test"] = rel(t.test);
    }
    tj["split_seed"] = t.split_seed;
    tj["subsample"] = t.subsample_fraction;
    tj["subsample_stage"] = t.subsample_stage == SubsampleStage::kTrain ? "train" : "total";
    tj["subsample_seed"] = t.subsample_seed;
    j["tasks"].push_back(std::move(tj));
  }
  j["variants"] = nlohmann::ordered_json::array();
  for (const auto& v : m.variants) {
    nlohmann::ordered_json weights = nlohmann::ordered_json::object();
    for (const auto& t : m.variant_tasks(v)) weights[t.name] = t.weight;
    j["variants"].push_back({{"name", v.name}, {"tasks", v.tasks}, {"weights", weights}});
  }
  return j;
}

}  // namespace emogen
