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
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emogen/errors.hpp"
#include "emogen/text/vocab.hpp"

namespace emogen {

using Sentence = std::vector<std::string>;
using NGram = std::vector<std::string>;

inline std::vector<Sentence> tokenize_all(std::span<const std::string> sentences) {
  std::vector<Sentence> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(tokenize(s));
  return out;
}

inline std::map<NGram, std::size_t> ngram_counts(const Sentence& s, std::size_t n) {
  std::map<NGram, std::size_t> counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++counts[NGram(s.begin() + i, s.begin() + i + n)];
  return counts;
}

struct BleuStats {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

inline BleuStats bleu_stats(std::span<const Sentence> hyps, std::span<const Sentence> refs) {
  if (hyps.size() != refs.size()) {
    throw DataError("bleu: " + std::to_string(hyps.size()) + " hypotheses vs " + std::to_string(refs.size()) +
                    " references");
  }
  if (hyps.empty()) throw DataError("bleu: empty corpus");
  BleuStats st;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    st.hyp_len += hyps[i].size();
    st.ref_len += refs[i].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto h = ngram_counts(hyps[i], n);
      const auto r = ngram_counts(refs[i], n);
      for (const auto& [g, c] : h) {
        st.totals[n - 1] += c;
        if (auto it = r.find(g); it != r.end()) st.matches[n - 1] += std::min(c, it->second);
      }
    }
  }
  return st;
}

/// Corpus BLEU-4 in [0, 100]. A zero precision is replaced by
/// 1 / (2 * candidate n-gram count), with the count floored at 1.
inline double bleu_from_stats(const BleuStats& st) {
  if (st.hyp_len == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    const double p = st.matches[n] > 0
                         ? static_cast<double>(st.matches[n]) / static_cast<double>(st.totals[n])
                         : 1.0 / (2.0 * static_cast<double>(std::max<std::size_t>(st.totals[n], 1)));
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(st.hyp_len);
  const double r = static_cast<double>(st.ref_len);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

inline double bleu(std::span<const std::string> hypotheses, std::span<const std::string> references) {
  const auto h = tokenize_all(hypotheses);
  const auto r = tokenize_all(references);
  return bleu_from_stats(bleu_stats(h, r));
}

/// Unique n-grams over total n-grams, counted across the whole corpus.
inline double distinct_n(std::span<const std::string> hypotheses, std::size_t n) {
  if (n < 1) throw ConfigError("distinct_n: n must be at least 1");
  if (hypotheses.empty()) throw DataError("distinct_n: empty corpus");
  std::map<NGram, std::size_t> all;
  std::size_t total = 0;
  for (const auto& s : tokenize_all(hypotheses)) {
    for (const auto& [g, c] : ngram_counts(s, n)) {
      all[g] += c;
      total += c;
    }
  }
  if (total == 0) throw DataError("distinct_n: every sentence is shorter than " + std::to_string(n) + " tokens");
  return static_cast<double>(all.size()) / static_cast<double>(total);
}

inline std::size_t whitespace_tokens(const std::string& s) {
  std::istringstream is(s);
  std::size_t n = 0;
  for (std::string w; is >> w;) ++n;
  return n;
}

/// Mean number of whitespace-separated words per response.
inline double avg_len(std::span<const std::string> hypotheses) {
  if (hypotheses.empty()) throw DataError("avg_len: empty corpus");
  std::size_t total = 0;
  for (const auto& h : hypotheses) total += whitespace_tokens(h);
  return static_cast<double>(total) / static_cast<double>(hypotheses.size());
}

/// Position-wise token agreement, divided by the longer of each pair and
/// pooled over the corpus.
inline double token_accuracy(std::span<const std::string> hypotheses, std::span<const std::string> references) {
  if (hypotheses.size() != references.size()) throw DataError("token_accuracy: length mismatch");
  if (hypotheses.empty()) throw DataError("token_accuracy: empty corpus");
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto h = tokenize(hypotheses[i]);
    const auto r = tokenize(references[i]);
    for (std::size_t j = 0; j < std::min(h.size(), r.size()); ++j) hit += h[j] == r[j];
    total += std::max(h.size(), r.size());
  }
  return total == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(total);
}

struct ClassificationScores {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

inline ClassificationScores classification_scores(std::span<const std::string> pred, std::span<const std::string> gold,
                                                  std::span<const std::string> labels) {
  if (pred.size() != gold.size()) {
    throw DataError("classification_scores: " + std::to_string(pred.size()) + " predictions vs " +
                    std::to_string(gold.size()) + " gold labels");
  }
  if (pred.empty()) throw DataError("classification_scores: no examples");
  if (labels.empty()) throw ConfigError("classification_scores: empty label set");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index.emplace(labels[i], i);
  auto lookup = [&](const std::string& l) {
    auto it = index.find(l);
    if (it == index.end()) throw DataError("classification_scores: label '" + l + "' is not in the label set");
    return it->second;
  };
  std::vector<std::size_t> tp(labels.size()), fp(labels.size()), fn(labels.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::size_t p = lookup(pred[i]);
    const std::size_t g = lookup(gold[i]);
    if (p == g) {
      ++correct;
      ++tp[p];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  double f1_sum = 0.0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const double denom = 2.0 * static_cast<double>(tp[k]) + static_cast<double>(fp[k] + fn[k]);
    f1_sum += denom > 0.0 ? 2.0 * static_cast<double>(tp[k]) / denom : 0.0;
  }
  return {static_cast<double>(correct) / static_cast<double>(pred.size()),
          f1_sum / static_cast<double>(labels.size())};
}

struct MetricsReport {
  std::optional<double> bleu;
  std::optional<double> distinct1;
  std::optional<double> distinct2;
  std::optional<double> avg_len;
  std::optional<double> token_accuracy;
  std::optional<double> accuracy;
  std::optional<double> macro_f1;
  std::size_t generation_examples = 0;
  std::size_t classification_examples = 0;
};

inline MetricsReport generation_report(std::span<const std::string> hyps, std::span<const std::string> refs) {
  MetricsReport r;
  r.bleu = bleu(hyps, refs);
  auto safe_distinct = [&](std::size_t n) -> std::optional<double> {
    try {
      return distinct_n(hyps, n);
    } catch (const DataError&) {
      return std::nullopt;
    }
  };
  r.distinct1 = safe_distinct(1);
  r.distinct2 = safe_distinct(2);
  r.avg_len = avg_len(hyps);
  r.token_accuracy = token_accuracy(hyps, refs);
  r.generation_examples = hyps.size();
  return r;
}

/// JSON with distinct-n scaled by 100.
inline nlohmann::ordered_json report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  auto put = [&](const char* key, const std::optional<double>& v, double scale = 1.0) {
    if (v) j[key] = *v * scale;
  };
  put("bleu", r.bleu);
  put("dist1", r.distinct1, 100.0);
  put("dist2", r.distinct2, 100.0);
  put("avg_len", r.avg_len);
  put("token_accuracy", r.token_accuracy);
  put("accuracy", r.accuracy);
  put("macro_f1", r.macro_f1);
  if (r.generation_examples > 0) j["generation_examples"] = r.generation_examples;
  if (r.classification_examples > 0) j["classification_examples"] = r.classification_examples;
  return j;
}

}  // namespace emogen
