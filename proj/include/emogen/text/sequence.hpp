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
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emogen/errors.hpp"
#include "emogen/numerics/losses.hpp"
#include "emogen/text/vocab.hpp"

namespace emogen {

inline constexpr std::size_t kDefaultMaxLen = 64;

enum class SeqRole : std::uint8_t { kUtterance, kResponse, kDecoderInput };

struct TokenSeq {
  std::vector<TokenId> ids;
  SeqRole role = SeqRole::kUtterance;

  std::size_t size() const noexcept { return ids.size(); }
  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

/// Tokenizes, maps OOV tokens to UNK and appends EOS. Longer inputs keep
/// their prefix; EOS is always the final id.
inline TokenSeq encode(std::string_view text, const Vocab& vocab, std::size_t max_len = kDefaultMaxLen,
                       SeqRole role = SeqRole::kUtterance) {
  if (max_len < 2) throw ConfigError("encode: max_len must be at least 2");
  const auto tokens = tokenize(text);
  TokenSeq seq;
  seq.role = role;
  const std::size_t body = std::min(tokens.size(), max_len - 1);
  seq.ids.reserve(body + 1);
  for (std::size_t i = 0; i < body; ++i) seq.ids.push_back(vocab.id(tokens[i]));
  seq.ids.push_back(kEosId);
  return seq;
}

/// Maps ids back to tokens, dropping PAD, BOS and EOS.
inline std::vector<std::string> decode_tokens(std::span<const TokenId> ids, const Vocab& vocab) {
  std::vector<std::string> out;
  for (TokenId id : ids) {
    if (id == kPadId || id == kBosId || id == kEosId) continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

inline std::string decode(std::span<const TokenId> ids, const Vocab& vocab) {
  return detokenize(decode_tokens(ids, vocab));
}

/// [BOS] + target[0 .. N-1]: same length as the target, first id BOS.
inline TokenSeq shift_right(const TokenSeq& target) {
  if (target.ids.empty()) throw DataError("shift_right: empty sequence");
  if (target.role == SeqRole::kDecoderInput) throw DataError("shift_right: sequence is already a decoder input");
  TokenSeq out;
  out.role = SeqRole::kDecoderInput;
  out.ids.reserve(target.ids.size());
  out.ids.push_back(kBosId);
  out.ids.insert(out.ids.end(), target.ids.begin(), target.ids.end() - 1);
  return out;
}

/// Right-padded [batch x length] id matrix with a real-token mask.
struct PaddedBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> mask;
  std::vector<std::size_t> lengths;

  TokenId at(std::size_t b, std::size_t t) const { return ids[b * length + t]; }

  /// Ids with padded positions replaced by `ignore_index`, for use as loss targets.
  std::vector<TokenId> loss_targets(TokenId ignore_index = kIgnoreIndex) const {
    std::vector<TokenId> out(ids);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!mask[i]) out[i] = ignore_index;
    }
    return out;
  }
};

inline PaddedBatch pad_batch(std::span<const TokenSeq> seqs) {
  if (seqs.empty()) throw DataError("pad_batch: empty batch");
  PaddedBatch out;
  out.batch = seqs.size();
  for (const auto& s : seqs) out.length = std::max(out.length, s.ids.size());
  out.ids.assign(out.batch * out.length, kPadId);
  out.mask.assign(out.batch * out.length, 0);
  out.lengths.reserve(out.batch);
  for (std::size_t b = 0; b < out.batch; ++b) {
    const auto& ids = seqs[b].ids;
    std::copy(ids.begin(), ids.end(), out.ids.begin() + static_cast<std::ptrdiff_t>(b * out.length));
    std::fill_n(out.mask.begin() + static_cast<std::ptrdiff_t>(b * out.length), ids.size(), std::uint8_t{1});
    out.lengths.push_back(ids.size());
  }
  return out;
}

}  // namespace emogen
