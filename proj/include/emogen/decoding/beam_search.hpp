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
#include <concepts>
#include <limits>
#include <span>
#include <vector>

#include "emogen/errors.hpp"
#include "emogen/model/transformer.hpp"
#include "emogen/text/sequence.hpp"

namespace emogen {

struct BeamConfig {
  std::size_t beam_width = 5;
  /// Maximum hypothesis length in tokens, BOS included.
  std::size_t max_len = kDefaultMaxLen;
  /// Forbid repeating any n-gram of this order inside a hypothesis; 0 disables.
  std::size_t no_repeat_ngram = 3;
  /// Finished hypotheses are ranked by log_prob / length^(length_penalty - 1),
  /// so the default 1.0 ranks by the raw summed log-probability.
  double length_penalty = 1.0;

  void validate() const {
    if (beam_width < 1) throw ConfigError("beam search: beam_width must be at least 1");
    if (max_len < 2) throw ConfigError("beam search: max_len must be at least 2");
  }
};

struct Hypothesis {
  std::vector<TokenId> ids;  // starts with BOS
  double log_prob = 0.0;
  bool finished = false;

  double score(double length_penalty) const {
    if (length_penalty == 1.0) return log_prob;
    return log_prob / std::pow(static_cast<double>(ids.size()), length_penalty - 1.0);
  }
};

struct BeamResult {
  Hypothesis best;
  /// Every hypothesis that finished, in the order it finished.
  std::vector<Hypothesis> finished;
};

/// Next-token log-probabilities for a set of prefixes (one row per prefix,
/// one column per vocabulary id).
template <class S>
concept StepScorer = requires(S& s, const std::vector<std::vector<TokenId>>& prefixes) {
  { s(prefixes) } -> std::convertible_to<std::vector<std::vector<double>>>;
};

/// True when appending `next` to `ids` would repeat an n-gram already in `ids`.
inline bool repeats_ngram(std::span<const TokenId> ids, TokenId next, std::size_t n) {
  if (n == 0 || ids.size() + 1 < n) return false;
  if (n == 1) return std::find(ids.begin(), ids.end(), next) != ids.end();
  const std::span<const TokenId> tail = ids.last(n - 1);
  for (std::size_t start = 0; start + n <= ids.size(); ++start) {
    if (ids[start + n - 1] == next && std::equal(tail.begin(), tail.end(), ids.begin() + static_cast<std::ptrdiff_t>(start))) {
      return true;
    }
  }
  return false;
}

/// Beam search over a step scorer.
///
/// Each step expands every live hypothesis over the vocabulary (PAD and BOS
/// excluded, repeated n-grams blocked) and ranks candidates by score, then
/// lower token id, then lower beam index. EOS candidates ranked within the
/// beam width finish; the best beam_width non-EOS candidates stay live.
/// Search stops once beam_width hypotheses have finished, when no live
/// hypothesis can still beat the best finished one, or at max_len.
template <StepScorer Scorer>
BeamResult beam_search(Scorer& scorer, const BeamConfig& config) {
  config.validate();
  struct Candidate {
    double log_prob;
    TokenId token;
    std::size_t beam;
  };
  const double lp = config.length_penalty;
  std::vector<Hypothesis> live{Hypothesis{{kBosId}, 0.0, false}};
  std::vector<Hypothesis> finished;

  while (!live.empty()) {
    if (live.front().ids.size() >= config.max_len) {
      for (auto& h : live) {
        h.finished = true;
        finished.push_back(std::move(h));
      }
      live.clear();
      break;
    }
    std::vector<std::vector<TokenId>> prefixes;
    prefixes.reserve(live.size());
    for (const auto& h : live) prefixes.push_back(h.ids);
    const std::vector<std::vector<double>> rows = scorer(prefixes);
    if (rows.size() != live.size()) throw ShapeError("beam search: scorer returned the wrong number of rows");

    std::vector<Candidate> candidates;
    for (std::size_t b = 0; b < live.size(); ++b) {
      const auto& row = rows[b];
      for (std::size_t v = 0; v < row.size(); ++v) {
        const auto token = static_cast<TokenId>(v);
        if (token == kPadId || token == kBosId) continue;
        if (!(row[v] > -std::numeric_limits<double>::infinity())) continue;
        if (repeats_ngram(live[b].ids, token, config.no_repeat_ngram)) continue;
        candidates.push_back({live[b].log_prob + row[v], token, b});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& c) {
      if (a.log_prob != c.log_prob) return a.log_prob > c.log_prob;
      if (a.token != c.token) return a.token < c.token;
      return a.beam < c.beam;
    });

    std::vector<Hypothesis> next;
    for (std::size_t rank = 0; rank < candidates.size(); ++rank) {
      if (next.size() >= config.beam_width && rank >= config.beam_width) break;
      const Candidate& c = candidates[rank];
      Hypothesis h{live[c.beam].ids, c.log_prob, false};
      h.ids.push_back(c.token);
      if (c.token == kEosId) {
        if (rank < config.beam_width) {
          h.finished = true;
          finished.push_back(std::move(h));
        }
      } else if (next.size() < config.beam_width) {
        next.push_back(std::move(h));
      }
    }
    if (next.empty() && finished.empty()) {
      // Every continuation was blocked; return the best partial hypothesis.
      return {live.front(), {}};
    }
    live = std::move(next);
    if (finished.size() >= config.beam_width) break;
    if (lp == 1.0 && !finished.empty() && !live.empty()) {
      double best_done = -std::numeric_limits<double>::infinity();
      for (const auto& f : finished) best_done = std::max(best_done, f.log_prob);
      // Log-probabilities only fall as hypotheses grow.
      if (best_done >= live.front().log_prob) break;
    }
  }

  BeamResult result;
  result.finished = std::move(finished);
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.finished.size(); ++i) {
    if (result.finished[i].score(lp) > result.finished[best].score(lp)) best = i;
  }
  result.best = result.finished.at(best);
  return result;
}

/// Step scorer backed by a model: the utterance is encoded once and every
/// call runs the decoder over the full prefixes.
class ModelStepScorer {
 public:
  ModelStepScorer(const ModelBundle& model, const TokenSeq& utterance) : model_(model) {
    const std::vector<TokenSeq> one{utterance};
    source_ = pad_batch(one);
    NoGradGuard no_grad;
    memory_ = model_.encode(source_);
  }

  std::vector<std::vector<double>> operator()(const std::vector<std::vector<TokenId>>& prefixes) {
    NoGradGuard no_grad;
    const std::size_t k = prefixes.size();
    const std::size_t len = prefixes.front().size();
    const std::size_t S = source_.length;
    const std::size_t d = model_.config().d_model;

    PaddedBatch src;
    src.batch = k;
    src.length = S;
    src.lengths.assign(k, source_.lengths[0]);
    std::vector<double> mem(k * S * d);
    for (std::size_t b = 0; b < k; ++b) {
      src.ids.insert(src.ids.end(), source_.ids.begin(), source_.ids.end());
      src.mask.insert(src.mask.end(), source_.mask.begin(), source_.mask.end());
      std::copy(memory_.values().begin(), memory_.values().end(), mem.begin() + static_cast<std::ptrdiff_t>(b * S * d));
    }
    const Tensor memory(Shape{k, S, d}, std::move(mem));

    std::vector<TokenSeq> seqs;
    for (const auto& p : prefixes) {
      if (p.size() != len) throw ShapeError("beam search: prefixes must share one length");
      seqs.push_back({p, SeqRole::kDecoderInput});
    }
    const PaddedBatch dec = pad_batch(seqs);
    const Tensor hidden = model_.decode(memory, src, dec);
    std::vector<std::size_t> last(k);
    for (std::size_t b = 0; b < k; ++b) last[b] = b * len + len - 1;
    const Tensor logits = model_.lm_logits(gather_rows(hidden, last));

    const std::size_t V = logits.cols();
    std::vector<std::vector<double>> out(k, std::vector<double>(V));
    const auto z = logits.values();
    for (std::size_t b = 0; b < k; ++b) {
      const double* row = z.data() + b * V;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < V; ++v) mx = std::max(mx, row[v]);
      double s = 0.0;
      for (std::size_t v = 0; v < V; ++v) s += std::exp(row[v] - mx);
      const double lse = mx + std::log(s);
      for (std::size_t v = 0; v < V; ++v) out[b][v] = row[v] - lse;
    }
    return out;
  }

 private:
  const ModelBundle& model_;
  PaddedBatch source_;
  Tensor memory_;
};

/// Decodes one response for `utterance`. The result holds the generated ids
/// without the leading BOS (EOS kept when the hypothesis finished with it).
inline TokenSeq beam_search(const ModelBundle& model, const TokenSeq& utterance, const BeamConfig& config) {
  BeamConfig c = config;
  c.max_len = std::min(c.max_len, model.config().max_len);
  ModelStepScorer scorer(model, utterance);
  const BeamResult r = beam_search(scorer, c);
  TokenSeq out;
  out.role = SeqRole::kResponse;
  out.ids.assign(r.best.ids.begin() + 1, r.best.ids.end());
  return out;
}

}  // namespace emogen
