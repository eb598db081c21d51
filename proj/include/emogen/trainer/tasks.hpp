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

#include <span>
#include <string>
#include <vector>

#include "emogen/data/dataset.hpp"
#include "emogen/text/sequence.hpp"

namespace emogen {

struct EncodedGeneration {
  TokenSeq utterance;
  TokenSeq response;
};

struct EncodedClassification {
  TokenSeq utterance;
  std::int32_t label = 0;
};

/// A task after tokenization: what the trainer and evaluators consume.
struct EncodedTask {
  std::string name;
  TaskKind kind = TaskKind::kGeneration;
  double weight = 1.0;
  std::vector<std::string> labels;
  Splits<EncodedGeneration> generation;
  Splits<EncodedClassification> classification;

  std::size_t train_size() const {
    return kind == TaskKind::kGeneration ? generation.train.size() : classification.train.size();
  }
};

inline EncodedTask encode_task(const LoadedTask& task, const Vocab& vocab, std::size_t max_len) {
  EncodedTask out;
  out.name = task.spec.name;
  out.kind = task.spec.kind;
  out.weight = task.spec.weight;
  out.labels = task.spec.labels;
  auto gen = [&](const std::vector<GenerationExample>& in, std::vector<EncodedGeneration>& dst) {
    dst.reserve(in.size());
    for (const auto& e : in) {
      dst.push_back({encode(e.utterance, vocab, max_len, SeqRole::kUtterance),
                     encode(e.response, vocab, max_len, SeqRole::kResponse)});
    }
  };
  auto cls = [&](const std::vector<ClassificationExample>& in, std::vector<EncodedClassification>& dst) {
    dst.reserve(in.size());
    for (const auto& e : in) {
      dst.push_back({encode(e.text, vocab, max_len, SeqRole::kUtterance),
                     static_cast<std::int32_t>(task.spec.label_index(e.label))});
    }
  };
  if (out.kind == TaskKind::kGeneration) {
    gen(task.generation.train, out.generation.train);
    gen(task.generation.valid, out.generation.valid);
    gen(task.generation.test, out.generation.test);
  } else {
    cls(task.classification.train, out.classification.train);
    cls(task.classification.valid, out.classification.valid);
    cls(task.classification.test, out.classification.test);
  }
  return out;
}

/// Padded tensors for one mini-batch of one task.
struct Batch {
  std::string task;
  TaskKind kind = TaskKind::kGeneration;
  PaddedBatch source;
  PaddedBatch decoder_input;       // generation only
  std::vector<TokenId> targets;    // generation only; padding = kIgnoreIndex
  std::vector<std::int32_t> labels;  // classification only
};

inline Batch make_generation_batch(std::string task, std::span<const EncodedGeneration> examples) {
  std::vector<TokenSeq> src, dec, tgt;
  for (const auto& e : examples) {
    src.push_back(e.utterance);
    dec.push_back(shift_right(e.response));
    tgt.push_back(e.response);
  }
  Batch b;
  b.task = std::move(task);
  b.kind = TaskKind::kGeneration;
  b.source = pad_batch(src);
  b.decoder_input = pad_batch(dec);
  b.targets = pad_batch(tgt).loss_targets(kIgnoreIndex);
  return b;
}

inline Batch make_classification_batch(std::string task, std::span<const EncodedClassification> examples) {
  std::vector<TokenSeq> src;
  Batch b;
  for (const auto& e : examples) {
    src.push_back(e.utterance);
    b.labels.push_back(e.label);
  }
  b.task = std::move(task);
  b.kind = TaskKind::kClassification;
  b.source = pad_batch(src);
  return b;
}

/// Batch from the train split of `task` for the given example indices.
inline Batch gather_train_batch(const EncodedTask& task, std::span<const std::size_t> indices) {
  if (task.kind == TaskKind::kGeneration) {
    std::vector<EncodedGeneration> picked;
    for (auto i : indices) picked.push_back(task.generation.train.at(i));
    return make_generation_batch(task.name, picked);
  }
  std::vector<EncodedClassification> picked;
  for (auto i : indices) picked.push_back(task.classification.train.at(i));
  return make_classification_batch(task.name, picked);
}

}  // namespace emogen
