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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "emogen/emogen.hpp"

namespace testing_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("emogen_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

/// A model small enough for finite differences (under 5k parameters).
inline emogen::ModelConfig tiny_config(std::size_t vocab_size = 12,
                                       std::vector<emogen::ClsHeadSpec> heads = {{"a", 3}, {"b", 2}}) {
  emogen::ModelConfig c;
  c.vocab_size = vocab_size;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_enc_layers = 1;
  c.n_dec_layers = 1;
  c.d_ff = 16;
  c.max_len = 8;
  c.dropout = 0.0;
  c.cls_heads = std::move(heads);
  return c;
}

/// Random token sequence of content ids (>= 4) ending in EOS.
inline emogen::TokenSeq random_seq(std::mt19937_64& gen, std::size_t vocab, std::size_t min_len, std::size_t max_len,
                                   emogen::SeqRole role = emogen::SeqRole::kUtterance) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<emogen::TokenId> tok(emogen::kNumReserved, static_cast<emogen::TokenId>(vocab - 1));
  emogen::TokenSeq s;
  s.role = role;
  const std::size_t n = len(gen);
  for (std::size_t i = 0; i + 1 < n; ++i) s.ids.push_back(tok(gen));
  s.ids.push_back(emogen::kEosId);
  return s;
}

inline emogen::Batch random_generation_batch(std::mt19937_64& gen, std::size_t vocab, std::size_t batch,
                                             std::size_t max_len) {
  std::vector<emogen::EncodedGeneration> ex;
  for (std::size_t b = 0; b < batch; ++b) {
    ex.push_back({random_seq(gen, vocab, 2, max_len), random_seq(gen, vocab, 2, max_len, emogen::SeqRole::kResponse)});
  }
  return emogen::make_generation_batch("gen", ex);
}

inline emogen::Batch random_classification_batch(std::mt19937_64& gen, const std::string& task, std::size_t vocab,
                                                 std::size_t labels, std::size_t batch, std::size_t max_len) {
  std::vector<emogen::EncodedClassification> ex;
  std::uniform_int_distribution<std::int32_t> lab(0, static_cast<std::int32_t>(labels - 1));
  for (std::size_t b = 0; b < batch; ++b) ex.push_back({random_seq(gen, vocab, 2, max_len), lab(gen)});
  return emogen::make_classification_batch(task, ex);
}

struct GradCheck {
  std::size_t checked = 0;
  std::size_t passed = 0;
  double worst_rel = 0.0;
  std::string worst_name;
  double fraction() const { return checked ? static_cast<double>(passed) / static_cast<double>(checked) : 0.0; }
};

/// Compares analytic gradients of `loss_fn` against central differences with
/// step h for every element of every parameter. An element passes when the
/// relative error is within `rel_tol`, or both gradients are below `abs_floor`.
inline GradCheck finite_difference_check(emogen::ModelBundle& model, const std::function<emogen::Tensor()>& loss_fn,
                                         double h = 1e-4, double rel_tol = 1e-3, double abs_floor = 1e-8) {
  model.zero_grad();
  loss_fn().backward();
  GradCheck out;
  for (auto& p : model.parameters()) {
    const std::vector<double> analytic(p.tensor.grad().begin(), p.tensor.grad().end());
    auto values = p.tensor.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      double plus, minus;
      {
        emogen::NoGradGuard guard;
        values[i] = saved + h;
        plus = loss_fn().item();
        values[i] = saved - h;
        minus = loss_fn().item();
      }
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[i];
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double rel = scale > 0.0 ? std::abs(a - numeric) / scale : 0.0;
      const bool ok = scale < abs_floor || rel <= rel_tol;
      ++out.checked;
      out.passed += ok;
      if (scale >= abs_floor && rel > out.worst_rel) {
        out.worst_rel = rel;
        out.worst_name = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  model.zero_grad();
  return out;
}

inline std::vector<double> flat_values(const emogen::ModelBundle& m) {
  std::vector<double> out;
  for (const auto& p : m.parameters()) out.insert(out.end(), p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

inline std::vector<double> flat_grads(const emogen::ModelBundle& m) {
  std::vector<double> out;
  for (const auto& p : m.parameters()) out.insert(out.end(), p.tensor.grad().begin(), p.tensor.grad().end());
  return out;
}

/// Writes the synthetic corpora and a manifest over them; returns the manifest path.
inline std::filesystem::path write_synthetic_manifest(const std::filesystem::path& dir, const std::string& body,
                                                      std::uint64_t seed, std::size_t size, std::size_t cls_size) {
  emogen::cmd_synth({dir / "data", seed, size, cls_size});
  const auto path = dir / "run.ini";
  std::ofstream(path) << body;
  return path;
}

/// Task sections over the files cmd_synth writes into data/.
inline std::string synthetic_task_sections(const std::vector<std::string>& classification) {
  std::string s =
      "[task.response]\nkind = generation\n"
      "train = data/response.train.tsv\nvalid = data/response.valid.tsv\ntest = data/response.test.tsv\n\n";
  for (const auto& t : classification) {
    s += "[task." + t + "]\nkind = classification\nlabels_file = data/" + t + ".labels\n" + "train = data/" + t +
         ".train.tsv\nvalid = data/" + t + ".valid.tsv\ntest = data/" + t + ".test.tsv\n\n";
  }
  return s;
}

}  // namespace testing_support
