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

// Reference decoders for small vocabularies: exhaustive enumeration of every
// sequence up to a length bound, and plain greedy argmax.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using Ids = std::vector<std::int32_t>;
/// Next-token log-probabilities for one prefix.
using RowFn = std::function<std::vector<double>(const Ids&)>;

constexpr std::int32_t kPad = 0, kBos = 1, kEos = 2;

inline bool repeats(const Ids& ids, std::int32_t next, std::size_t n) {
  if (n == 0) return false;
  Ids ext = ids;
  ext.push_back(next);
  if (ext.size() < n) return false;
  const std::size_t last = ext.size() - n;
  for (std::size_t s = 0; s < last; ++s) {
    bool same = true;
    for (std::size_t k = 0; k < n; ++k) same = same && ext[s + k] == ext[last + k];
    if (same) return true;
  }
  return false;
}

struct Best {
  Ids ids;
  double log_prob = -std::numeric_limits<double>::infinity();
};

/// Highest-log-prob sequence among all that start with BOS and either end in
/// EOS or reach max_len tokens.
inline Best exhaustive(const RowFn& row, std::size_t vocab, std::size_t max_len, std::size_t no_repeat) {
  Best best;
  std::function<void(const Ids&, double)> walk = [&](const Ids& prefix, double lp) {
    if (prefix.size() >= max_len) {
      if (lp > best.log_prob) best = {prefix, lp};
      return;
    }
    const auto r = row(prefix);
    for (std::size_t v = 0; v < vocab; ++v) {
      const auto tok = static_cast<std::int32_t>(v);
      if (tok == kPad || tok == kBos || repeats(prefix, tok, no_repeat)) continue;
      Ids next = prefix;
      next.push_back(tok);
      if (tok == kEos) {
        if (lp + r[v] > best.log_prob) best = {next, lp + r[v]};
      } else {
        walk(next, lp + r[v]);
      }
    }
  };
  walk({kBos}, 0.0);
  return best;
}

/// Argmax at every step, lowest id on ties, same masking as the beam search.
inline Best greedy(const RowFn& row, std::size_t vocab, std::size_t max_len, std::size_t no_repeat) {
  Best b{{kBos}, 0.0};
  while (b.ids.size() < max_len) {
    const auto r = row(b.ids);
    std::int32_t arg = -1;
    for (std::size_t v = 0; v < vocab; ++v) {
      const auto tok = static_cast<std::int32_t>(v);
      if (tok == kPad || tok == kBos || repeats(b.ids, tok, no_repeat)) continue;
      if (arg < 0 || r[v] > r[static_cast<std::size_t>(arg)]) arg = tok;
    }
    if (arg < 0) break;
    b.ids.push_back(arg);
    b.log_prob += r[static_cast<std::size_t>(arg)];
    if (arg == kEos) break;
  }
  return b;
}

/// Deterministic pseudo-random language model over `vocab` ids: the logits
/// of a prefix are a hash of (seed, prefix), normalized with log-softmax.
inline RowFn hashed_model(std::uint64_t seed, std::size_t vocab, double scale = 3.0) {
  return [=](const Ids& prefix) {
    std::uint64_t h = seed * 0x9E3779B97F4A7C15ULL + 0x1234567ULL;
    for (auto t : prefix) h = (h ^ static_cast<std::uint64_t>(t + 7)) * 0x100000001B3ULL;
    std::vector<double> z(vocab);
    double mx = -1e300;
    for (std::size_t v = 0; v < vocab; ++v) {
      std::uint64_t x = h + v * 0xBF58476D1CE4E5B9ULL;
      x ^= x >> 31;
      x *= 0x94D049BB133111EBULL;
      x ^= x >> 29;
      z[v] = scale * (static_cast<double>(x >> 11) / 9007199254740992.0);
      mx = std::max(mx, z[v]);
    }
    double s = 0;
    for (double x : z) s += std::exp(x - mx);
    for (double& x : z) x = x - mx - std::log(s);
    return z;
  };
}

}  // namespace oracle
