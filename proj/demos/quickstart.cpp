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

// Builds a small synthetic R+E6 setup in memory, trains a few epochs and
// prints a decoded response and an emotion prediction.

#include <iostream>
#include <vector>

#include "emogen/emogen.hpp"

int main() {
  using namespace emogen;
  const std::uint64_t seed = 3;

  TaskSpec gen_spec;
  gen_spec.name = "response";
  LoadedTask gen{gen_spec, split_811(synthetic::generation_corpus(600, seed), seed), {}};

  TaskSpec e6_spec;
  e6_spec.name = "e6";
  e6_spec.kind = TaskKind::kClassification;
  e6_spec.labels = synthetic::e6_labels();
  LoadedTask e6{e6_spec, {}, split_811(synthetic::classification_corpus(synthetic::Granularity::kE6, 300, seed), seed)};

  std::vector<std::string> lines;
  for (const auto& e : gen.generation.train) {
    lines.push_back(e.utterance);
    lines.push_back(e.response);
  }
  for (const auto& e : e6.classification.train) lines.push_back(e.text);
  const Vocab vocab = build_vocab(lines);

  ModelConfig config;
  config.vocab_size = vocab.size();
  config.d_model = 64;
  config.d_ff = 256;
  config.cls_heads = {{"e6", 6}};
  ModelBundle model = ModelBundle::init(config, seed);

  const std::vector<EncodedTask> tasks{encode_task(gen, vocab, config.max_len), encode_task(e6, vocab, config.max_len)};
  TrainPlan plan;
  plan.epochs = 8;
  plan.seed = seed;
  plan.optimizer.learning_rate = 1e-3;
  TrainOutput out;
  out.progress = &std::cerr;
  const TrainResult result = train(model, tasks, plan, out);

  const std::string utterance = "i feel happy about the movie";
  std::cout << "utterance: " << utterance << "\n";
  std::cout << "response:  " << generate_response(*result.best_model, vocab, utterance, BeamConfig{}) << "\n";

  const std::vector<EncodedClassification> probe{{encode(utterance, vocab), 0}};
  const auto label = predict_labels(*result.best_model, "e6", probe, 1).front();
  std::cout << "emotion:   " << synthetic::e6_labels()[static_cast<std::size_t>(label)] << "\n";
  return 0;
}
