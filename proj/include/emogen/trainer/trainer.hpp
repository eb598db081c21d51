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
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emogen/model/checkpoint.hpp"
#include "emogen/model/transformer.hpp"
#include "emogen/numerics/adamw.hpp"
#include "emogen/numerics/losses.hpp"
#include "emogen/trainer/schedule.hpp"
#include "emogen/trainer/tasks.hpp"

namespace emogen {

struct TrainPlan {
  std::size_t batch_size = 32;
  std::size_t epochs = 64;
  std::uint64_t seed = 0;
  std::size_t max_len = kDefaultMaxLen;
  double label_smoothing = 0.1;
  AdamWConfig optimizer{};
  /// Global gradient-norm limit; zero disables clipping.
  double grad_clip = 1.0;

  /// Checks the settings that do not depend on the task list.
  void validate_settings() const {
    if (epochs < 1) throw ConfigError("train plan: epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("train plan: batch_size must be at least 1");
    if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
      throw ConfigError("train plan: label_smoothing must be in [0, 1)");
    }
    if (!(grad_clip >= 0.0)) throw ConfigError("train plan: grad_clip must be non-negative");
    optimizer.validate();
  }

  void validate(std::span<const EncodedTask> tasks) const {
    if (tasks.empty()) throw ConfigError("train plan: no tasks");
    validate_settings();
    std::size_t generation = 0;
    for (const auto& t : tasks) {
      if (t.kind == TaskKind::kGeneration) {
        ++generation;
        if (t.weight != 1.0) throw ConfigError("train plan: generation weight is fixed at 1");
      } else if (!(t.weight >= 0.0 && t.weight <= 1.0)) {
        throw ConfigError("train plan: weight of '" + t.name + "' must be in [0, 1]");
      }
    }
    if (generation != 1) throw ConfigError("train plan: exactly one generation task is required");
  }
};

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::string task;
  std::size_t batch_index = 0;
  double loss = 0.0;  // unweighted task loss
  double weight = 1.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::map<std::string, double> train_loss;      // running mean per task
  std::map<std::string, double> valid_loss;      // unweighted
  std::map<std::string, double> valid_accuracy;  // classification tasks
};

struct LossReport {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
};

// ---------------------------------------------------------------------------
// Evaluation helpers

struct SplitLoss {
  double mean = 0.0;
  std::size_t count = 0;  // tokens (generation) or examples (classification)
};

/// Token-weighted mean generation loss over a split.
inline SplitLoss generation_loss(const ModelBundle& model, std::span<const EncodedGeneration> examples,
                                 std::size_t batch_size, double label_smoothing) {
  NoGradGuard no_grad;
  double total = 0.0;
  std::size_t tokens = 0;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const auto chunk = examples.subspan(start, std::min(batch_size, examples.size() - start));
    const Batch b = make_generation_batch("", chunk);
    std::size_t n = 0;
    for (auto t : b.targets) n += t != kIgnoreIndex;
    const double loss =
        label_smoothed_nll(model.forward_generation(b.source, b.decoder_input), b.targets, label_smoothing).item();
    total += loss * static_cast<double>(n);
    tokens += n;
  }
  return {tokens ? total / static_cast<double>(tokens) : std::numeric_limits<double>::quiet_NaN(), tokens};
}

/// Argmax label index for every example.
inline std::vector<std::int32_t> predict_labels(const ModelBundle& model, const std::string& task,
                                                std::span<const EncodedClassification> examples,
                                                std::size_t batch_size) {
  NoGradGuard no_grad;
  std::vector<std::int32_t> out;
  out.reserve(examples.size());
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const auto chunk = examples.subspan(start, std::min(batch_size, examples.size() - start));
    const Batch b = make_classification_batch(task, chunk);
    const Tensor logits = model.forward_classification(b.source, task);
    const std::size_t C = logits.cols();
    const auto v = logits.values();
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < C; ++c) {
        if (v[r * C + c] > v[r * C + best]) best = c;
      }
      out.push_back(static_cast<std::int32_t>(best));
    }
  }
  return out;
}

inline SplitLoss classification_loss(const ModelBundle& model, const std::string& task,
                                     std::span<const EncodedClassification> examples, std::size_t batch_size) {
  NoGradGuard no_grad;
  double total = 0.0;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const auto chunk = examples.subspan(start, std::min(batch_size, examples.size() - start));
    const Batch b = make_classification_batch(task, chunk);
    total += classification_nll(model.forward_classification(b.source, task), b.labels).item() *
             static_cast<double>(chunk.size());
  }
  return {examples.empty() ? std::numeric_limits<double>::quiet_NaN() : total / static_cast<double>(examples.size()),
          examples.size()};
}

// ---------------------------------------------------------------------------
// Per-batch update

/// Owns the optimizer state and dropout stream for one model.
class Trainer {
 public:
  Trainer(ModelBundle& model, TrainPlan plan)
      : model_(model),
        plan_(std::move(plan)),
        optimizer_(OptimizerState::for_parameters(model.parameters(), plan_.optimizer)),
        dropout_rng_(derive_seed({plan_.seed, 0xD409ULL})) {}

  const TrainPlan& plan() const noexcept { return plan_; }
  OptimizerState& optimizer() noexcept { return optimizer_; }
  const OptimizerState& optimizer() const noexcept { return optimizer_; }

  /// Forward pass for `batch` with dropout active; returns the raw task loss.
  Tensor task_loss(const Batch& batch) {
    const ForwardOptions opt{true, &dropout_rng_};
    if (batch.kind == TaskKind::kGeneration) {
      return label_smoothed_nll(model_.forward_generation(batch.source, batch.decoder_input, opt), batch.targets,
                                plan_.label_smoothing);
    }
    return classification_nll(model_.forward_classification(batch.source, batch.task, opt), batch.labels);
  }

  /// Backpropagates weight * loss into the parameter gradients (which
  /// accumulate) and returns the unweighted loss. A zero weight records the
  /// loss without touching any gradient.
  double accumulate_gradients(const Batch& batch, double weight) {
    const Tensor loss = task_loss(batch);
    const double value = loss.item();
    if (!std::isfinite(value)) throw NumericError("non-finite loss on task '" + batch.task + "'");
    if (weight != 0.0) scale(loss, weight).backward();
    return value;
  }

  /// One complete update: gradients of weight * loss, clipping, AdamW, then
  /// gradients zeroed. With weight zero no update is applied at all.
  StepRecord step(const BatchTicket& ticket, const Batch& batch, double weight, std::size_t epoch,
                  std::size_t step_index) {
    StepRecord rec{epoch, step_index, ticket.task_name, ticket.batch_index, 0.0, weight};
    try {
      rec.loss = accumulate_gradients(batch, weight);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (task " + ticket.task_name + ", batch " +
                         std::to_string(ticket.batch_index) + ", epoch " + std::to_string(epoch) + ")");
    }
    if (weight != 0.0) {
      if (plan_.grad_clip > 0.0) clip_grad_norm(model_.parameters(), plan_.grad_clip);
      adamw_step(model_.parameters(), optimizer_);
    }
    model_.zero_grad();
    return rec;
  }

 private:
  ModelBundle& model_;
  TrainPlan plan_;
  OptimizerState optimizer_;
  Rng dropout_rng_;
};

// ---------------------------------------------------------------------------
// Training loop

/// Where train() writes its artifacts. An empty `directory` disables all
/// file output.
struct TrainOutput {
  std::filesystem::path directory;
  const Vocab* vocab = nullptr;
  LabelSets labels;
  /// Keep epoch_NNN.ckpt for every epoch instead of only last.ckpt.
  bool keep_epoch_checkpoints = false;
  /// Per-epoch progress lines (typically stderr); may be null.
  std::ostream* progress = nullptr;
};

struct TrainResult {
  LossReport report;
  std::size_t best_epoch = 0;
  double best_valid_generation_loss = std::numeric_limits<double>::infinity();
  std::optional<ModelBundle> best_model;
};

inline std::string format_step(const StepRecord& r) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch=" << r.epoch << " step=" << r.step << " task=" << r.task << " batch=" << r.batch_index
     << " loss=" << r.loss << " weight=" << r.weight;
  return os.str();
}

inline nlohmann::json epoch_to_json(const EpochRecord& e) {
  return {{"epoch", e.epoch},
          {"train_loss", e.train_loss},
          {"valid_loss", e.valid_loss},
          {"valid_accuracy", e.valid_accuracy}};
}

/// Runs plan.epochs epochs of pooled, shuffled mini-batches over all tasks
/// with a non-zero weight. Validation losses are recorded after each epoch
/// and the model with the lowest validation generation loss is kept.
inline TrainResult train(ModelBundle& model, std::span<const EncodedTask> tasks, const TrainPlan& plan,
                         const TrainOutput& output = {}) {
  plan.validate(tasks);
  for (const auto& t : tasks) {
    if (t.kind == TaskKind::kClassification && !model.has_head(t.name)) {
      throw ConfigError("train: model has no head for task '" + t.name + "'");
    }
  }
  const bool write = !output.directory.empty();
  std::ofstream step_log, metrics_log;
  if (write) {
    if (output.vocab == nullptr) throw ConfigError("train: checkpoint output needs a vocab");
    std::filesystem::create_directories(output.directory);
    step_log.open(output.directory / "train.log", std::ios::binary | std::ios::trunc);
    metrics_log.open(output.directory / "metrics.jsonl", std::ios::binary | std::ios::trunc);
    if (!step_log || !metrics_log) throw IoError("cannot write logs under " + output.directory.string());
  }

  Trainer trainer(model, plan);
  TrainResult result;
  std::size_t global_step = 0;

  // Zero-weight tasks never enter the pool; the pool is assembled in name
  // order so the schedule does not depend on how the tasks were listed.
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].weight > 0.0) active.push_back(i);
  }
  std::sort(active.begin(), active.end(), [&](std::size_t a, std::size_t b) { return tasks[a].name < tasks[b].name; });

  for (std::size_t epoch = 1; epoch <= plan.epochs; ++epoch) {
    std::vector<TaskBatchCount> counts;
    std::map<std::string, std::vector<std::vector<std::size_t>>> membership;
    std::map<std::string, const EncodedTask*> by_name;
    for (std::size_t i : active) {
      const auto& t = tasks[i];
      membership[t.name] = epoch_batches(t.train_size(), plan.batch_size, epoch, plan.seed, name_stream(t.name));
      counts.push_back({t.name, membership[t.name].size()});
      by_name[t.name] = &t;
    }
    const auto schedule = build_schedule(counts, epoch, plan.seed);

    std::map<std::string, std::pair<double, std::size_t>> running;
    for (const auto& ticket : schedule) {
      const EncodedTask& task = *by_name.at(ticket.task_name);
      const Batch batch = gather_train_batch(task, membership.at(ticket.task_name).at(ticket.batch_index));
      const StepRecord rec = trainer.step(ticket, batch, task.weight, epoch, ++global_step);
      auto& [sum, n] = running[rec.task];
      sum += rec.loss;
      ++n;
      if (write) step_log << format_step(rec) << '\n';
      result.report.steps.push_back(rec);
    }

    EpochRecord er;
    er.epoch = epoch;
    for (const auto& [name, acc] : running) er.train_loss[name] = acc.first / static_cast<double>(acc.second);
    double valid_gen = std::numeric_limits<double>::quiet_NaN();
    for (const auto& t : tasks) {
      if (t.kind == TaskKind::kGeneration) {
        if (t.generation.valid.empty()) continue;
        valid_gen = generation_loss(model, t.generation.valid, plan.batch_size, plan.label_smoothing).mean;
        er.valid_loss[t.name] = valid_gen;
      } else {
        if (t.classification.valid.empty()) continue;
        er.valid_loss[t.name] = classification_loss(model, t.name, t.classification.valid, plan.batch_size).mean;
        const auto pred = predict_labels(model, t.name, t.classification.valid, plan.batch_size);
        std::size_t hit = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == t.classification.valid[i].label;
        er.valid_accuracy[t.name] = static_cast<double>(hit) / static_cast<double>(pred.size());
      }
    }
    // Without a validation split the latest epoch counts as best.
    const bool improved = std::isnan(valid_gen) || valid_gen < result.best_valid_generation_loss;
    if (improved) {
      result.best_epoch = epoch;
      result.best_valid_generation_loss = std::isnan(valid_gen) ? result.best_valid_generation_loss : valid_gen;
      result.best_model = model.clone();
    }
    if (write) {
      metrics_log << epoch_to_json(er).dump() << '\n';
      step_log.flush();
      metrics_log.flush();
      const auto name = output.keep_epoch_checkpoints ? "epoch_" + std::to_string(epoch) + ".ckpt"
                                                      : std::string("last.ckpt");
      save_checkpoint(output.directory / name, model, *output.vocab, output.labels);
      if (improved) save_checkpoint(output.directory / "best.ckpt", model, *output.vocab, output.labels);
    }
    if (output.progress) {
      *output.progress << "[train] epoch " << epoch << "/" << plan.epochs;
      for (const auto& [name, v] : er.train_loss) *output.progress << " train[" << name << "]=" << v;
      for (const auto& [name, v] : er.valid_loss) *output.progress << " valid[" << name << "]=" << v;
      for (const auto& [name, v] : er.valid_accuracy) *output.progress << " acc[" << name << "]=" << v;
      *output.progress << '\n';
    }
    result.report.epochs.push_back(std::move(er));
  }
  return result;
}

}  // namespace emogen
