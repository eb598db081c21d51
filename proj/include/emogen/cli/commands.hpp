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

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <streambuf>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "emogen/cli/manifest.hpp"
#include "emogen/data/dataset.hpp"
#include "emogen/data/split.hpp"
#include "emogen/data/synthetic.hpp"
#include "emogen/decoding/generate.hpp"
#include "emogen/metrics/metrics.hpp"
#include "emogen/model/checkpoint.hpp"
#include "emogen/trainer/trainer.hpp"

namespace emogen {

// ---------------------------------------------------------------------------
// Logging

/// Streambuf that forwards whole lines to stderr under one lock, each line
/// prefixed with a tag, so concurrent variants do not interleave mid-line.
class TaggedLineBuf : public std::streambuf {
 public:
  explicit TaggedLineBuf(std::string tag) : tag_(std::move(tag)) {}
  ~TaggedLineBuf() override {
    if (!line_.empty()) emit();
  }

 protected:
  int_type overflow(int_type ch) override {
    if (ch == traits_type::eof()) return ch;
    line_ += static_cast<char>(ch);
    if (ch == '\n') emit();
    return ch;
  }

 private:
  void emit() {
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::cerr << tag_ << line_;
    if (line_.back() != '\n') std::cerr << '\n';
    std::cerr.flush();
    line_.clear();
  }

  std::string tag_;
  std::string line_;
};

/// EMOGEN_THREADS caps how many matrix variants run at once (default 1).
inline std::size_t thread_cap() {
  const char* env = std::getenv("EMOGEN_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError("EMOGEN_THREADS must be a positive integer, got '" + std::string(env) + "'");
  return static_cast<std::size_t>(v);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("write error in " + path.string());
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  std::size_t size = 2000;      // generation pairs
  std::size_t cls_size = 1000;  // examples per classification task
};

/// Writes response.tsv and e2/e6/e12.tsv (whole corpora), their 8:1:1 splits
/// as NAME.{train,valid,test}.tsv, and NAME.labels for each classification task.
inline void cmd_synth(const SynthOptions& opt) {
  std::filesystem::create_directories(opt.out_dir);
  auto write_splits = [&](const std::string& name, const auto& all, auto&& writer) {
    writer(opt.out_dir / (name + ".tsv"), all);
    const auto s = split_811(all, opt.seed);
    writer(opt.out_dir / (name + ".train.tsv"), s.train);
    writer(opt.out_dir / (name + ".valid.tsv"), s.valid);
    writer(opt.out_dir / (name + ".test.tsv"), s.test);
  };
  write_splits("response", synthetic::generation_corpus(opt.size, opt.seed),
               [](const auto& p, const auto& v) { write_generation_tsv(p, v); });
  const std::pair<const char*, synthetic::Granularity> cls[] = {
      {"e2", synthetic::Granularity::kE2}, {"e6", synthetic::Granularity::kE6}, {"e12", synthetic::Granularity::kE12}};
  for (const auto& [name, g] : cls) {
    write_splits(name, synthetic::classification_corpus(g, opt.cls_size, opt.seed),
                 [](const auto& p, const auto& v) { write_classification_tsv(p, v); });
    std::string labels;
    for (const auto& l : synthetic::labels_for(g)) labels += l + "\n";
    write_text(opt.out_dir / (std::string(name) + ".labels"), labels);
  }
}

// ---------------------------------------------------------------------------
// Shared data preparation

struct PreparedData {
  Vocab vocab;
  std::vector<LoadedTask> loaded;    // manifest order
  std::vector<EncodedTask> encoded;  // manifest order, default weights
};

inline PreparedData prepare_data(const RunManifest& m) {
  PreparedData d;
  for (const auto& spec : m.tasks) d.loaded.push_back(load_task(spec));
  // The vocabulary covers the train splits of every task in the manifest,
  // so all variants of a matrix share token ids.
  std::vector<std::string> lines;
  for (const auto& t : d.loaded) {
    for (const auto& e : t.generation.train) {
      lines.push_back(e.utterance);
      lines.push_back(e.response);
    }
    for (const auto& e : t.classification.train) lines.push_back(e.text);
  }
  d.vocab = build_vocab(lines, m.min_count);
  for (const auto& t : d.loaded) d.encoded.push_back(encode_task(t, d.vocab, m.model.max_len));
  return d;
}

inline ModelConfig resolved_model_config(const RunManifest& m, const Vocab& vocab) {
  ModelConfig c = m.model;
  c.vocab_size = vocab.size();
  c.cls_heads = m.heads();
  c.validate();
  return c;
}

/// Every variant starts from the same initial weights.
inline std::uint64_t model_seed(const RunManifest& m) { return derive_seed({m.seed, 0x30DE1ULL}); }

inline std::vector<EncodedTask> select_tasks(const RunManifest& m, const PreparedData& d, const VariantSpec& v) {
  std::vector<EncodedTask> out;
  for (const auto& spec : m.variant_tasks(v)) {
    for (const auto& t : d.encoded) {
      if (t.name != spec.name) continue;
      EncodedTask copy = t;
      copy.weight = spec.weight;
      out.push_back(std::move(copy));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation of a trained model on the shared test splits

struct VariantRow {
  std::string variant;
  std::vector<std::string> tasks;
  std::vector<std::pair<std::string, double>> weights;
  MetricsReport generation;
  std::map<std::string, ClassificationScores> classification;
  std::size_t best_epoch = 0;
};

struct TestEvaluation {
  MetricsReport generation;
  std::map<std::string, ClassificationScores> classification;
  std::vector<std::string> hypotheses;
};

inline TestEvaluation evaluate_on_test(const ModelBundle& model, const RunManifest& m, const PreparedData& d) {
  TestEvaluation out;
  for (std::size_t i = 0; i < d.loaded.size(); ++i) {
    const LoadedTask& t = d.loaded[i];
    if (t.spec.kind == TaskKind::kGeneration) {
      std::size_t n = t.generation.test.size();
      if (m.eval_limit > 0) n = std::min(n, m.eval_limit);
      std::vector<std::string> utterances, refs;
      for (std::size_t k = 0; k < n; ++k) {
        utterances.push_back(t.generation.test[k].utterance);
        refs.push_back(detokenize(tokenize(t.generation.test[k].response)));
      }
      if (utterances.empty()) throw DataError("task '" + t.spec.name + "': empty test split");
      out.hypotheses = generate_responses(model, d.vocab, utterances, m.beam);
      out.generation = generation_report(out.hypotheses, refs);
    } else {
      const EncodedTask& e = d.encoded[i];
      if (e.classification.test.empty()) throw DataError("task '" + t.spec.name + "': empty test split");
      const auto pred = predict_labels(model, t.spec.name, e.classification.test, m.plan.batch_size);
      std::vector<std::string> p, g;
      for (std::size_t k = 0; k < pred.size(); ++k) {
        p.push_back(t.spec.labels.at(static_cast<std::size_t>(pred[k])));
        g.push_back(t.classification.test[k].label);
      }
      out.classification[t.spec.name] = classification_scores(p, g, t.spec.labels);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline std::string weights_string(const std::vector<std::pair<std::string, double>>& weights) {
  std::string out;
  for (const auto& [name, w] : weights) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", w);
    out += (out.empty() ? "" : ",") + name + "=" + buf;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : sep) + p;
  return out;
}

/// Tab-separated table: generation metrics (distinct-n scaled by 100),
/// then accuracy and macro-F1 for each classification task.
inline std::string report_tsv(const RunManifest& m, const std::vector<VariantRow>& rows) {
  std::vector<std::string> cls;
  for (const auto& h : m.heads()) cls.push_back(h.task_name);
  std::string out = "variant\ttasks\tweights\tbleu\tdist1\tdist2\tavg_len\ttoken_acc";
  for (const auto& c : cls) out += "\t" + c + "_acc\t" + c + "_f1";
  out += "\n";
  auto opt = [](const std::optional<double>& v, double scale = 1.0) { return v ? fmt4(*v * scale) : std::string("-"); };
  for (const auto& r : rows) {
    out += r.variant + "\t" + join(r.tasks, "+") + "\t" + weights_string(r.weights);
    out += "\t" + opt(r.generation.bleu) + "\t" + opt(r.generation.distinct1, 100.0) + "\t" +
           opt(r.generation.distinct2, 100.0) + "\t" + opt(r.generation.avg_len) + "\t" +
           opt(r.generation.token_accuracy);
    for (const auto& c : cls) {
      auto it = r.classification.find(c);
      out += it == r.classification.end() ? "\t-\t-" : "\t" + fmt4(it->second.accuracy) + "\t" + fmt4(it->second.macro_f1);
    }
    out += "\n";
  }
  return out;
}

inline nlohmann::ordered_json row_to_json(const VariantRow& r) {
  nlohmann::ordered_json j;
  j["variant"] = r.variant;
  j["tasks"] = r.tasks;
  nlohmann::ordered_json w = nlohmann::ordered_json::object();
  for (const auto& [name, v] : r.weights) w[name] = v;
  j["weights"] = w;
  j["best_epoch"] = r.best_epoch;
  j["generation"] = report_to_json(r.generation);
  nlohmann::ordered_json c = nlohmann::ordered_json::object();
  for (const auto& [name, s] : r.classification) c[name] = {{"accuracy", s.accuracy}, {"macro_f1", s.macro_f1}};
  j["classification"] = c;
  return j;
}

inline void write_reports(const RunManifest& m, const std::vector<VariantRow>& rows, bool complete) {
  write_text(m.output / "report.tsv", report_tsv(m, rows));
  nlohmann::ordered_json j;
  j["complete"] = complete;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) j["rows"].push_back(row_to_json(r));
  write_text(m.output / "report.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// train / matrix

/// Trains one variant into `dir`, then evaluates its best model on the test
/// splits of every manifest task.
inline VariantRow run_variant(const RunManifest& m, const PreparedData& d, const VariantSpec& v,
                              const std::filesystem::path& dir, std::ostream* progress) {
  const std::vector<EncodedTask> tasks = select_tasks(m, d, v);
  ModelBundle model = ModelBundle::init(resolved_model_config(m, d.vocab), model_seed(m));
  TrainOutput output;
  output.directory = dir;
  output.vocab = &d.vocab;
  output.labels = m.label_sets();
  output.keep_epoch_checkpoints = m.keep_epoch_checkpoints;
  output.progress = progress;
  TrainResult result = train(model, tasks, m.plan, output);
  const ModelBundle& best = result.best_model ? *result.best_model : model;

  TestEvaluation eval = evaluate_on_test(best, m, d);
  std::string hyps;
  for (const auto& h : eval.hypotheses) hyps += h + "\n";
  write_text(dir / "test.hyp.txt", hyps);

  VariantRow row;
  row.variant = v.name;
  for (const auto& t : tasks) {
    row.tasks.push_back(t.name);
    if (t.kind == TaskKind::kClassification) row.weights.emplace_back(t.name, t.weight);
  }
  row.generation = eval.generation;
  row.classification = std::move(eval.classification);
  row.best_epoch = result.best_epoch;
  write_text(dir / "metrics.json", row_to_json(row).dump(2) + "\n");
  return row;
}

inline void write_run_files(const RunManifest& m, const PreparedData& d) {
  std::filesystem::create_directories(m.output);
  write_text(m.output / "run.json", manifest_echo(m).dump(2) + "\n");
  d.vocab.save(m.output / "vocab.txt");
}

/// Trains one variant (or, without one, every manifest task at its default
/// weight) into <output>/<variant>.
inline VariantRow cmd_train(const RunManifest& m, const std::optional<std::string>& variant) {
  VariantSpec v;
  if (variant) {
    auto it = std::find_if(m.variants.begin(), m.variants.end(), [&](const auto& x) { return x.name == *variant; });
    if (it == m.variants.end()) throw ConfigError("train: no variant '" + *variant + "' in the manifest");
    v = *it;
  } else {
    v.name = "all";
    for (const auto& t : m.tasks) v.tasks.push_back(t.name);
  }
  const PreparedData d = prepare_data(m);
  write_run_files(m, d);
  TaggedLineBuf buf("[" + v.name + "] ");
  std::ostream progress(&buf);
  return run_variant(m, d, v, m.output / v.name, &progress);
}

/// Runs every variant with the shared seed and writes report.tsv and
/// report.json under the output directory. Finished rows are written even
/// when a later variant fails.
inline std::vector<VariantRow> cmd_matrix(const RunManifest& m) {
  if (m.variants.empty()) throw ConfigError("matrix: the manifest lists no [variant.*] sections");
  const PreparedData d = prepare_data(m);
  write_run_files(m, d);

  const std::size_t n = m.variants.size();
  std::vector<std::optional<VariantRow>> rows(n);
  std::mutex mu;
  std::exception_ptr failure;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};

  auto finished_rows = [&] {
    std::vector<VariantRow> out;
    for (const auto& r : rows) {
      if (r) out.push_back(*r);
    }
    return out;
  };
  auto worker = [&] {
    for (std::size_t i = next++; i < n && !abort; i = next++) {
      const VariantSpec& v = m.variants[i];
      try {
        TaggedLineBuf buf("[" + v.name + "] ");
        std::ostream progress(&buf);
        VariantRow row = run_variant(m, d, v, m.output / v.name, &progress);
        std::lock_guard lock(mu);
        rows[i] = std::move(row);
        write_reports(m, finished_rows(), false);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        abort = true;
      }
    }
  };
  const std::size_t threads = std::min(thread_cap(), n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const auto out = finished_rows();
  write_reports(m, out, failure == nullptr);
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------
// splits / generate / evaluate

/// Writes the split (and subsampled) files of every manifest task.
inline void cmd_splits(const RunManifest& m, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& spec : m.tasks) {
    const LoadedTask t = load_task(spec);
    const auto base = out_dir / spec.name;
    if (spec.kind == TaskKind::kGeneration) {
      write_generation_tsv(base.string() + ".train.tsv", t.generation.train);
      write_generation_tsv(base.string() + ".valid.tsv", t.generation.valid);
      write_generation_tsv(base.string() + ".test.tsv", t.generation.test);
    } else {
      write_classification_tsv(base.string() + ".train.tsv", t.classification.train);
      write_classification_tsv(base.string() + ".valid.tsv", t.classification.valid);
      write_classification_tsv(base.string() + ".test.tsv", t.classification.test);
    }
  }
}

inline std::size_t cmd_generate(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
                                const std::filesystem::path& output, const BeamConfig& config) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  return generate_file(ckpt.model, ckpt.vocab, input, output, config);
}

struct EvaluateOptions {
  std::filesystem::path hyp, ref;
  std::filesystem::path pred, gold, labels;
  std::filesystem::path output;
};

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<std::string> out;
  for (std::string line; std::getline(is, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

/// Labels from a file with one label per line or TEXT<TAB>LABEL lines.
inline std::vector<std::string> read_label_column(const std::filesystem::path& path) {
  std::vector<std::string> out;
  for (auto& line : read_lines(path)) {
    const auto tab = line.rfind('\t');
    out.push_back(tab == std::string::npos ? line : line.substr(tab + 1));
  }
  return out;
}

inline MetricsReport cmd_evaluate(const EvaluateOptions& opt) {
  MetricsReport r;
  if (!opt.hyp.empty() || !opt.ref.empty()) {
    if (opt.hyp.empty() || opt.ref.empty()) throw ConfigError("evaluate: --hyp and --ref go together");
    const auto hyps = read_lines(opt.hyp);
    const auto refs = read_lines(opt.ref);
    r = generation_report(hyps, refs);
  }
  if (!opt.pred.empty() || !opt.gold.empty() || !opt.labels.empty()) {
    if (opt.pred.empty() || opt.gold.empty() || opt.labels.empty()) {
      throw ConfigError("evaluate: --pred, --gold and --labels go together");
    }
    const auto labels = read_label_file(opt.labels);
    const auto scores = classification_scores(read_label_column(opt.pred), read_label_column(opt.gold), labels);
    r.accuracy = scores.accuracy;
    r.macro_f1 = scores.macro_f1;
    r.classification_examples = read_lines(opt.pred).size();
  }
  if (!r.bleu && !r.accuracy) throw ConfigError("evaluate: nothing to evaluate");
  write_text(opt.output, report_to_json(r).dump(2) + "\n");
  return r;
}

}  // namespace emogen
