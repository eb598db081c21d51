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

// Checkpoint container:
//
//   line 1   "EMOGEN-CHECKPOINT 1"
//   line 2   byte length N of the JSON header
//   N bytes  JSON header: model config, inline vocab, label names per head,
//            parameter names and shapes in storage order
//   "\n"
//   payload  every parameter's values as little-endian IEEE-754 doubles,
//            concatenated in header order

#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emogen/model/transformer.hpp"
#include "emogen/text/vocab.hpp"

namespace emogen {

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes a little-endian host");

inline constexpr std::string_view kCheckpointMagic = "EMOGEN-CHECKPOINT 1";

using LabelSets = std::map<std::string, std::vector<std::string>>;

struct Checkpoint {
  ModelBundle model;
  Vocab vocab;
  LabelSets labels;
};

inline nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json heads = nlohmann::json::array();
  for (const auto& h : c.cls_heads) heads.push_back({{"task", h.task_name}, {"num_labels", h.num_labels}});
  return {{"vocab_size", c.vocab_size}, {"d_model", c.d_model},         {"n_heads", c.n_heads},
          {"n_enc_layers", c.n_enc_layers}, {"n_dec_layers", c.n_dec_layers}, {"d_ff", c.d_ff},
          {"max_len", c.max_len},       {"dropout", c.dropout},          {"cls_heads", heads}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.n_enc_layers = j.at("n_enc_layers").get<std::size_t>();
  c.n_dec_layers = j.at("n_dec_layers").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  for (const auto& h : j.at("cls_heads")) {
    c.cls_heads.push_back({h.at("task").get<std::string>(), h.at("num_labels").get<std::size_t>()});
  }
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const ModelBundle& model, const Vocab& vocab,
                            const LabelSets& labels) {
  if (vocab.size() != model.config().vocab_size) throw ConfigError("checkpoint: vocab size differs from the model's");
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : model.parameters()) params.push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
  const nlohmann::json header = {{"config", config_to_json(model.config())},
                                 {"vocab", vocab.corpus_tokens()},
                                 {"labels", labels},
                                 {"parameters", params}};
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint " + path.string());
    os << kCheckpointMagic << '\n' << text.size() << '\n' << text << '\n';
    for (const auto& p : model.parameters()) {
      const auto v = p.tensor.values();
      os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    if (!os) throw IoError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Loads a checkpoint. When `expected_heads` is given, the stored
/// classification heads must match it exactly.
inline Checkpoint load_checkpoint(const std::filesystem::path& path,
                                  const std::optional<std::vector<ClsHeadSpec>>& expected_heads = std::nullopt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read checkpoint " + path.string());
  std::string magic;
  std::getline(is, magic);
  if (magic != kCheckpointMagic) throw DataError(path.string() + ": not an emogen checkpoint");
  std::string len_line;
  std::getline(is, len_line);
  std::size_t header_len = 0;
  try {
    header_len = std::stoull(len_line);
  } catch (const std::exception&) {
    throw DataError(path.string() + ": corrupt checkpoint header length");
  }
  std::string text(header_len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!is || is.get() != '\n') throw DataError(path.string() + ": truncated checkpoint header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid checkpoint header: " + e.what());
  }

  ModelConfig config;
  Vocab vocab;
  LabelSets labels;
  try {
    config = config_from_json(header.at("config"));
    vocab = Vocab(header.at("vocab").get<std::vector<std::string>>());
    labels = header.at("labels").get<LabelSets>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid checkpoint header: " + e.what());
  }
  if (expected_heads && *expected_heads != config.cls_heads) {
    auto describe = [](const std::vector<ClsHeadSpec>& hs) {
      std::string s;
      for (const auto& h : hs) s += (s.empty() ? "" : ", ") + h.task_name + "/" + std::to_string(h.num_labels);
      return s.empty() ? std::string("none") : s;
    };
    throw ConfigError(path.string() + ": checkpoint heads {" + describe(config.cls_heads) +
                      "} do not match expected {" + describe(*expected_heads) + "}");
  }

  ModelBundle model(config);
  auto params = model.parameters();
  std::vector<std::pair<std::string, Shape>> stored;
  try {
    for (const auto& e : header.at("parameters")) {
      stored.emplace_back(e.at("name").get<std::string>(), e.at("shape").get<Shape>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid parameter table: " + e.what());
  }
  if (stored.size() != params.size()) throw DataError(path.string() + ": parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (stored[i].first != params[i].name || stored[i].second != params[i].tensor.shape()) {
      throw DataError(path.string() + ": parameter '" + params[i].name + "' does not match the architecture");
    }
    auto v = params[i].tensor.mutable_values();
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!is) throw DataError(path.string() + ": truncated parameter payload");
  }
  model.zero_grad();
  return {std::move(model), std::move(vocab), std::move(labels)};
}

}  // namespace emogen
