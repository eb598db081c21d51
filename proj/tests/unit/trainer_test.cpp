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

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "support.hpp"

using namespace emogen;
using testing_support::TempDir;

namespace {

struct SyntheticSetup {
  Vocab vocab;
  std::vector<EncodedTask> tasks;  // response, e6, e2
};

SyntheticSetup synthetic_setup(std::size_t gen_size, std::size_t cls_size, std::uint64_t seed) {
  TaskSpec g;
  g.name = "response";
  LoadedTask gen{g, split_811(synthetic::generation_corpus(gen_size, seed), seed), {}};
  std::vector<LoadedTask> loaded{gen};
  for (auto [name, gran] : {std::pair{"e6", synthetic::Granularity::kE6}, std::pair{"e2", synthetic::Granularity::kE2}}) {
    TaskSpec c;
    c.name = name;
    c.kind = TaskKind::kClassification;
    c.labels = synthetic::labels_for(gran);
    loaded.push_back({c, {}, split_811(synthetic::classification_corpus(gran, cls_size, seed), seed)});
  }
  std::vector<std::string> lines;
  for (const auto& t : loaded) {
    for (const auto& e : t.generation.train) {
      lines.push_back(e.utterance);
      lines.push_back(e.response);
    }
    for (const auto& e : t.classification.train) lines.push_back(e.text);
  }
  SyntheticSetup s{build_vocab(lines), {}};
  for (const auto& t : loaded) s.tasks.push_back(encode_task(t, s.vocab, 32));
  return s;
}

ModelConfig small_config(std::size_t vocab, double dropout = 0.0) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.d_model = 16;
  c.n_heads = 2;
  c.n_enc_layers = 1;
  c.n_dec_layers = 1;
  c.d_ff = 32;
  c.max_len = 32;
  c.dropout = dropout;
  c.cls_heads = {{"e6", 6}, {"e2", 2}};
  return c;
}

TrainPlan small_plan(std::size_t epochs) {
  TrainPlan p;
  p.batch_size = 16;
  p.epochs = epochs;
  p.seed = 5;
  p.max_len = 32;
  p.optimizer.learning_rate = 3e-3;
  return p;
}

}  // namespace

TEST(Schedule, PoolsEveryBatchExactlyOnce) {
  const std::vector<TaskBatchCount> counts{{"gen", 8}, {"e6", 2}};
  const auto s = build_schedule(counts, 1, 7);
  ASSERT_EQ(s.size(), 10u);
  std::map<std::string, std::vector<std::size_t>> seen;
  for (const auto& t : s) seen[t.task_name].push_back(t.batch_index);
  for (auto& [name, v] : seen) std::sort(v.begin(), v.end());
  EXPECT_EQ(seen["gen"], (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7}));
  EXPECT_EQ(seen["e6"], (std::vector<std::size_t>{0, 1}));
}

TEST(Schedule, SeededByEpochAndSeed) {
  const std::vector<TaskBatchCount> counts{{"gen", 20}, {"e6", 7}, {"e2", 5}};
  EXPECT_EQ(build_schedule(counts, 3, 1), build_schedule(counts, 3, 1));
  EXPECT_NE(build_schedule(counts, 3, 1), build_schedule(counts, 4, 1));
  EXPECT_NE(build_schedule(counts, 3, 1), build_schedule(counts, 3, 2));
  const std::vector<TaskBatchCount> single{{"gen", 30}};
  auto s = build_schedule(single, 1, 1);
  std::vector<std::size_t> idx;
  for (const auto& t : s) idx.push_back(t.batch_index);
  EXPECT_FALSE(std::is_sorted(idx.begin(), idx.end()));
  std::sort(idx.begin(), idx.end());
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(idx[i], i);
}

TEST(Schedule, RejectsEmptyInputs) {
  EXPECT_THROW(build_schedule(std::vector<TaskBatchCount>{}, 1, 1), ConfigError);
  EXPECT_THROW(build_schedule(std::vector<TaskBatchCount>{{"gen", 0}}, 1, 1), DataError);
}

TEST(Schedule, EpochBatchesPartitionTheTrainSplit) {
  const auto b = epoch_batches(70, 16, 2, 9, name_stream("e6"));
  ASSERT_EQ(b.size(), batch_count(70, 16));
  std::vector<std::size_t> all;
  for (const auto& chunk : b) all.insert(all.end(), chunk.begin(), chunk.end());
  EXPECT_EQ(b.back().size(), 6u);
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 70; ++i) EXPECT_EQ(all[i], i);
  EXPECT_NE(epoch_batches(70, 16, 2, 9, name_stream("e6")), epoch_batches(70, 16, 3, 9, name_stream("e6")));
}

TEST(TrainPlan, ValidateRequiresOneGenerationTask) {
  const auto s = synthetic_setup(50, 50, 1);
  const TrainPlan p = small_plan(1);
  EXPECT_NO_THROW(p.validate(s.tasks));
  std::vector<EncodedTask> no_gen(s.tasks.begin() + 1, s.tasks.end());
  EXPECT_THROW(p.validate(no_gen), ConfigError);
  auto two_gen = s.tasks;
  two_gen.push_back(s.tasks[0]);
  EXPECT_THROW(p.validate(two_gen), ConfigError);
  TrainPlan zero = p;
  zero.epochs = 0;
  EXPECT_THROW(zero.validate(s.tasks), ConfigError);
}

class StepContract : public ::testing::Test {
 protected:
  void SetUp() override {
    setup_ = synthetic_setup(60, 60, 2);
    batch_ = gather_train_batch(setup_.tasks[1], std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
  }
  ModelBundle fresh() const { return ModelBundle::init(small_config(setup_.vocab.size()), 3); }

  SyntheticSetup setup_;
  Batch batch_;
};

TEST_F(StepContract, ZeroWeightLeavesParametersUnchanged) {
  for (double wd : {0.0, 0.01}) {
    ModelBundle m = fresh();
    TrainPlan plan = small_plan(1);
    plan.optimizer.weight_decay = wd;
    Trainer t(m, plan);
    // Give the optimizer non-zero moments first.
    t.step({"e6", 1}, gather_train_batch(setup_.tasks[1], std::vector<std::size_t>{8, 9, 10}), 1.0, 1, 1);
    const auto before = testing_support::flat_values(m);
    const auto steps = t.optimizer().step_count;
    const StepRecord r = t.step({"e6", 0}, batch_, 0.0, 1, 2);
    EXPECT_EQ(testing_support::flat_values(m), before);
    EXPECT_EQ(t.optimizer().step_count, steps);
    EXPECT_GT(r.loss, 0.0);
    EXPECT_EQ(r.weight, 0.0);
  }
}

TEST_F(StepContract, UnitWeightEqualsUnweightedStep) {
  ModelBundle a = fresh(), b = fresh();
  TrainPlan plan = small_plan(1);
  Trainer ta(a, plan);
  ta.step({"e6", 0}, batch_, 1.0, 1, 1);

  // Reference: plain loss.backward(), clip, AdamW on an identical model.
  OptimizerState opt = OptimizerState::for_parameters(b.parameters(), plan.optimizer);
  classification_nll(b.forward_classification(batch_.source, "e6"), batch_.labels).backward();
  clip_grad_norm(b.parameters(), plan.grad_clip);
  adamw_step(b.parameters(), opt);
  EXPECT_EQ(testing_support::flat_values(a), testing_support::flat_values(b));
}

TEST_F(StepContract, HalfWeightHalvesEveryGradient) {
  ModelBundle a = fresh(), b = fresh();
  Trainer ta(a, small_plan(1)), tb(b, small_plan(1));
  ta.accumulate_gradients(batch_, 1.0);
  tb.accumulate_gradients(batch_, 0.5);
  const auto ga = testing_support::flat_grads(a), gb = testing_support::flat_grads(b);
  ASSERT_EQ(ga.size(), gb.size());
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < ga.size(); ++i) {
    EXPECT_EQ(gb[i], 0.5 * ga[i]) << i;
    nonzero += ga[i] != 0.0;
  }
  EXPECT_GT(nonzero, ga.size() / 2);
}

TEST_F(StepContract, StepZeroesGradientsAndReportsRawLoss) {
  ModelBundle m = fresh();
  Trainer t(m, small_plan(1));
  double expected;
  {
    NoGradGuard guard;
    expected = classification_nll(m.forward_classification(batch_.source, "e6"), batch_.labels).item();
  }
  const StepRecord r = t.step({"e6", 0}, batch_, 0.5, 1, 1);
  EXPECT_DOUBLE_EQ(r.loss, expected);
  for (double g : testing_support::flat_grads(m)) ASSERT_EQ(g, 0.0);
}

TEST_F(StepContract, NonFiniteLossNamesTaskBatchAndEpoch) {
  ModelBundle m = fresh();
  for (auto& p : m.parameters()) {
    if (p.name == "heads.e6.bias") p.tensor.mutable_values()[0] = std::numeric_limits<double>::quiet_NaN();
  }
  Trainer t(m, small_plan(1));
  try {
    t.step({"e6", 4}, batch_, 1.0, 7, 1);
    FAIL();
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("e6"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch 4"), std::string::npos) << msg;
    EXPECT_NE(msg.find("epoch 7"), std::string::npos) << msg;
  }
}

TEST(Train, GenerationOnlyConverges) {
  const auto s = synthetic_setup(200, 20, 3);
  ModelBundle m = ModelBundle::init(small_config(s.vocab.size()), 1);
  TrainPlan plan = small_plan(30);
  plan.label_smoothing = 0.0;  // keeps the loss floor at zero so the ratio is meaningful
  const std::vector<EncodedTask> tasks{s.tasks[0]};
  const TrainResult r = train(m, tasks, plan);
  const double initial = r.report.steps.front().loss;
  const double final_loss = r.report.epochs.back().train_loss.at("response");
  EXPECT_LT(final_loss, 0.2 * initial) << initial << " -> " << final_loss;
}

TEST(Train, MultiTaskLearnsEmotionAndKeepsImprovingGeneration) {
  const auto s = synthetic_setup(300, 300, 4);
  ModelBundle m = ModelBundle::init(small_config(s.vocab.size(), 0.1), 2);
  const std::vector<EncodedTask> tasks{s.tasks[0], s.tasks[1]};
  const TrainResult r = train(m, tasks, small_plan(15));
  EXPECT_GE(r.report.epochs.back().valid_accuracy.at("e6"), 0.95);
  std::size_t decreases = 0;
  for (std::size_t e = 1; e < r.report.epochs.size(); ++e) {
    decreases += r.report.epochs[e].train_loss.at("response") < r.report.epochs[e - 1].train_loss.at("response");
  }
  EXPECT_GE(static_cast<double>(decreases), 0.8 * static_cast<double>(r.report.epochs.size() - 1));
}

TEST(Train, LedgerCoversEveryBatch) {
  const auto s = synthetic_setup(80, 60, 5);
  ModelBundle m = ModelBundle::init(small_config(s.vocab.size()), 2);
  const TrainResult r = train(m, s.tasks, small_plan(2));
  std::size_t expected = 0;
  for (const auto& t : s.tasks) expected += batch_count(t.train_size(), 16);
  EXPECT_EQ(r.report.steps.size(), 2 * expected);
  std::map<std::pair<std::size_t, std::string>, std::set<std::size_t>> seen;
  for (const auto& st : r.report.steps) {
    EXPECT_TRUE((seen[{st.epoch, st.task}].insert(st.batch_index).second));
    EXPECT_TRUE(std::isfinite(st.loss));
    EXPECT_GE(st.loss, 0.0);
  }
}

TEST(Train, ZeroWeightTasksAndTaskOrderDoNotChangeTheRun) {
  const auto s = synthetic_setup(80, 60, 6);
  auto run = [&](std::vector<EncodedTask> tasks) {
    ModelBundle m = ModelBundle::init(small_config(s.vocab.size(), 0.1), 4);
    train(m, tasks, small_plan(2));
    return testing_support::flat_values(m);
  };
  const auto base = run({s.tasks[0], s.tasks[1]});
  EncodedTask e2_off = s.tasks[2];
  e2_off.weight = 0.0;
  EXPECT_EQ(run({s.tasks[1], e2_off, s.tasks[0]}), base);
  EXPECT_NE(run({s.tasks[0], s.tasks[1], s.tasks[2]}), base);
}

TEST(Train, WritesLogsAndCheckpointsDeterministically) {
  const auto s = synthetic_setup(80, 60, 7);
  TempDir dir("train");
  auto run = [&](const std::filesystem::path& out, bool keep) {
    ModelBundle m = ModelBundle::init(small_config(s.vocab.size(), 0.1), 4);
    TrainOutput o;
    o.directory = out;
    o.vocab = &s.vocab;
    o.labels = {{"e6", synthetic::e6_labels()}, {"e2", synthetic::e2_labels()}};
    o.keep_epoch_checkpoints = keep;
    return train(m, s.tasks, small_plan(3), o);
  };
  const TrainResult a = run(dir / "a", false);
  run(dir / "b", true);
  for (const auto* f : {"train.log", "metrics.jsonl", "last.ckpt", "best.ckpt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "a" / f)) << f;
  }
  EXPECT_EQ(testing_support::slurp(dir / "a" / "last.ckpt"), testing_support::slurp(dir / "b" / "epoch_3.ckpt"));
  EXPECT_EQ(testing_support::slurp(dir / "a" / "best.ckpt"), testing_support::slurp(dir / "b" / "best.ckpt"));
  EXPECT_EQ(testing_support::slurp(dir / "a" / "train.log"), testing_support::slurp(dir / "b" / "train.log"));
  EXPECT_TRUE(std::filesystem::exists(dir / "b" / "epoch_1.ckpt"));

  // The best checkpoint holds the epoch with the lowest validation generation loss.
  const Checkpoint best = load_checkpoint(dir / "a" / "best.ckpt");
  ASSERT_TRUE(a.best_model.has_value());
  EXPECT_EQ(testing_support::flat_values(best.model), testing_support::flat_values(*a.best_model));
  double lowest = 1e300;
  for (const auto& e : a.report.epochs) lowest = std::min(lowest, e.valid_loss.at("response"));
  EXPECT_EQ(a.best_valid_generation_loss, lowest);

  std::ifstream metrics(dir / "a" / "metrics.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(metrics, line); ++lines) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("epoch").get<std::size_t>(), lines + 1);
  }
  EXPECT_EQ(lines, 3u);
}
