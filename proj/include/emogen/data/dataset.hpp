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

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "emogen/data/split.hpp"
#include "emogen/errors.hpp"

namespace emogen {

struct GenerationExample {
  std::string utterance;
  std::string response;
  friend bool operator==(const GenerationExample&, const GenerationExample&) = default;
};

struct ClassificationExample {
  std::string text;
  std::string label;
  friend bool operator==(const ClassificationExample&, const ClassificationExample&) = default;
};

enum class TaskKind { kGeneration, kClassification };

/// When a task's subsample fraction is applied.
enum class SubsampleStage {
  kTotal,  // before splitting, to the whole file
  kTrain,  // after splitting, to the train split only
};

struct TaskSpec {
  std::string name;
  TaskKind kind = TaskKind::kGeneration;
  std::vector<std::string> labels;
  double weight = 1.0;

  /// Either one `data` file split 8:1:1, or explicit train/valid/test files.
  std::filesystem::path data;
  std::filesystem::path train;
  std::filesystem::path valid;
  std::filesystem::path test;
  std::uint64_t split_seed = 0;

  double subsample_fraction = 1.0;
  SubsampleStage subsample_stage = SubsampleStage::kTrain;
  std::uint64_t subsample_seed = 0;

  void validate() const {
    if (name.empty()) throw ConfigError("task without a name");
    if (!(weight >= 0.0 && weight <= 1.0)) throw ConfigError("task '" + name + "': weight must be in [0, 1]");
    if (kind == TaskKind::kGeneration) {
      if (weight != 1.0) throw ConfigError("task '" + name + "': the generation weight is fixed at 1");
      if (!labels.empty()) throw ConfigError("task '" + name + "': generation tasks take no labels");
    } else {
      if (labels.size() < 2) throw ConfigError("task '" + name + "': needs at least two labels");
      std::set<std::string> seen(labels.begin(), labels.end());
      if (seen.size() != labels.size()) throw ConfigError("task '" + name + "': duplicate labels");
    }
    if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
      throw ConfigError("task '" + name + "': subsample fraction must be in (0, 1]");
    }
    const bool single = !data.empty();
    const bool triple = !train.empty() || !valid.empty() || !test.empty();
    if (single == triple) throw ConfigError("task '" + name + "': give either data or train/valid/test paths");
    if (triple && (train.empty() || valid.empty() || test.empty())) {
      throw ConfigError("task '" + name + "': train, valid and test paths are all required");
    }
  }

  std::size_t label_index(std::string_view label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw DataError("task '" + name + "': unknown label '" + std::string(label) + "'");
    return static_cast<std::size_t>(it - labels.begin());
  }
};

struct LoadedTask {
  TaskSpec spec;
  Splits<GenerationExample> generation;
  Splits<ClassificationExample> classification;

  std::size_t train_size() const {
    return spec.kind == TaskKind::kGeneration ? generation.train.size() : classification.train.size();
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Splits "a<TAB>b" into two trimmed, non-empty fields.
inline std::pair<std::string, std::string> two_fields(const std::string& line, const std::filesystem::path& path,
                                                      std::size_t line_no, const char* first, const char* second) {
  const auto where = path.string() + ":" + std::to_string(line_no);
  const auto tab = line.find('\t');
  if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
    throw DataError(where + ": expected exactly two tab-separated fields");
  }
  auto a = trim(std::string_view(line).substr(0, tab));
  auto b = trim(std::string_view(line).substr(tab + 1));
  if (a.empty()) throw DataError(where + ": empty " + first + " field");
  if (b.empty()) throw DataError(where + ": empty " + second + " field");
  return {std::move(a), std::move(b)};
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  return is;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

inline void check_no_tabs(const std::string& s, const char* what) {
  if (s.find_first_of("\t\n") != std::string::npos) {
    throw DataError(std::string("cannot write ") + what + " containing a tab or newline");
  }
}

}  // namespace detail

/// Reads "utterance<TAB>response" lines.
inline std::vector<GenerationExample> read_generation_tsv(const std::filesystem::path& path) {
  auto is = detail::open_input(path);
  std::vector<GenerationExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto [u, r] = detail::two_fields(line, path, line_no, "utterance", "response");
    out.push_back({std::move(u), std::move(r)});
  }
  return out;
}

/// Reads "text<TAB>label" lines. When `labels` is non-empty every label must
/// belong to it.
inline std::vector<ClassificationExample> read_classification_tsv(const std::filesystem::path& path,
                                                                  const std::vector<std::string>& labels = {}) {
  auto is = detail::open_input(path);
  std::vector<ClassificationExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto [text, label] = detail::two_fields(line, path, line_no, "text", "label");
    if (!labels.empty() && std::find(labels.begin(), labels.end(), label) == labels.end()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown label '" + label + "'");
    }
    out.push_back({std::move(text), std::move(label)});
  }
  return out;
}

inline void write_generation_tsv(const std::filesystem::path& path, const std::vector<GenerationExample>& examples) {
  auto os = detail::open_output(path);
  for (const auto& e : examples) {
    detail::check_no_tabs(e.utterance, "an utterance");
    detail::check_no_tabs(e.response, "a response");
    os << e.utterance << '\t' << e.response << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

inline void write_classification_tsv(const std::filesystem::path& path,
                                     const std::vector<ClassificationExample>& examples) {
  auto os = detail::open_output(path);
  for (const auto& e : examples) {
    detail::check_no_tabs(e.text, "a text");
    detail::check_no_tabs(e.label, "a label");
    os << e.text << '\t' << e.label << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

/// One label per line.
inline std::vector<std::string> read_label_file(const std::filesystem::path& path) {
  auto is = detail::open_input(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    auto t = detail::trim(line);
    if (!t.empty()) out.push_back(std::move(t));
  }
  if (out.empty()) throw DataError(path.string() + ": no labels");
  return out;
}

namespace detail {

template <class T>
Splits<T> assemble_splits(const TaskSpec& spec, auto&& read) {
  Splits<T> s;
  if (!spec.data.empty()) {
    std::vector<T> all = read(spec.data);
    if (spec.subsample_stage == SubsampleStage::kTotal && spec.subsample_fraction < 1.0) {
      all = subsample(all, spec.subsample_fraction, spec.subsample_seed);
    }
    s = split_811(all, spec.split_seed);
  } else {
    s.train = read(spec.train);
    s.valid = read(spec.valid);
    s.test = read(spec.test);
    if (spec.subsample_stage == SubsampleStage::kTotal && spec.subsample_fraction < 1.0) {
      s.train = subsample(s.train, spec.subsample_fraction, spec.subsample_seed);
      s.valid = subsample(s.valid, spec.subsample_fraction, spec.subsample_seed + 1);
      s.test = subsample(s.test, spec.subsample_fraction, spec.subsample_seed + 2);
    }
  }
  if (spec.subsample_stage == SubsampleStage::kTrain && spec.subsample_fraction < 1.0) {
    s.train = subsample(s.train, spec.subsample_fraction, spec.subsample_seed);
  }
  if (s.train.empty()) throw DataError("task '" + spec.name + "': empty train split");
  return s;
}

}  // namespace detail

/// Reads a task's files and applies its split and subsampling rules.
inline LoadedTask load_task(const TaskSpec& spec) {
  spec.validate();
  LoadedTask task;
  task.spec = spec;
  if (spec.kind == TaskKind::kGeneration) {
    task.generation = detail::assemble_splits<GenerationExample>(
        spec, [](const std::filesystem::path& p) { return read_generation_tsv(p); });
  } else {
    task.classification = detail::assemble_splits<ClassificationExample>(
        spec, [&](const std::filesystem::path& p) { return read_classification_tsv(p, spec.labels); });
  }
  return task;
}

}  // namespace emogen
