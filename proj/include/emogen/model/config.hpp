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

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "emogen/errors.hpp"

namespace emogen {

struct ClsHeadSpec {
  std::string task_name;
  std::size_t num_labels = 0;

  friend bool operator==(const ClsHeadSpec&, const ClsHeadSpec&) = default;
};

/// Shape of the shared encoder-decoder. Defaults are the desk-scale setup.
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 128;
  std::size_t n_heads = 4;
  std::size_t n_enc_layers = 2;
  std::size_t n_dec_layers = 2;
  std::size_t d_ff = 512;
  std::size_t max_len = 64;
  double dropout = 0.1;
  std::vector<ClsHeadSpec> cls_heads;

  void validate() const {
    if (vocab_size < 5) throw ConfigError("model: vocab_size must exceed the 4 reserved tokens");
    if (d_model == 0 || n_heads == 0) throw ConfigError("model: d_model and n_heads must be positive");
    if (d_model % n_heads != 0) {
      throw ConfigError("model: d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                        std::to_string(n_heads));
    }
    if (d_ff == 0) throw ConfigError("model: d_ff must be positive");
    if (max_len < 2) throw ConfigError("model: max_len must be at least 2");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model: dropout must be in [0, 1)");
    std::set<std::string> names;
    for (const auto& h : cls_heads) {
      if (h.task_name.empty()) throw ConfigError("model: classification head without a name");
      if (h.num_labels < 2) throw ConfigError("model: head '" + h.task_name + "' needs at least 2 labels");
      if (!names.insert(h.task_name).second) throw ConfigError("model: duplicate head '" + h.task_name + "'");
    }
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace emogen
