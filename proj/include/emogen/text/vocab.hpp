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
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emogen/errors.hpp"

namespace emogen {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kNumReserved = 4;

inline constexpr std::array<std::string_view, kNumReserved> kReservedTokens{"<pad>", "<s>", "</s>", "<unk>"};

/// Lowercases ASCII letters, splits on whitespace, and emits every ASCII
/// punctuation character as its own token. Bytes >= 0x80 stay inside words.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x80 && std::isspace(u)) {
      flush();
    } else if (u < 0x80 && std::ispunct(u)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : ch);
    }
  }
  flush();
  return out;
}

/// Joins tokens with single spaces.
inline std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

/// Token inventory with four reserved ids (PAD, BOS, EOS, UNK) ahead of the
/// corpus tokens. Immutable once built.
class Vocab {
 public:
  Vocab() : tokens_(kReservedTokens.begin(), kReservedTokens.end()) { reindex(); }

  /// `tokens` excludes the reserved entries; id = index + 4.
  explicit Vocab(std::vector<std::string> tokens) : Vocab() {
    for (auto& t : tokens) {
      if (t.empty() || t.find_first_of(" \t\r\n") != std::string::npos) {
        throw DataError("vocab: invalid token '" + t + "'");
      }
      tokens_.push_back(std::move(t));
    }
    reindex();
    if (index_.size() != tokens_.size()) throw DataError("vocab: duplicate token");
  }

  std::size_t size() const noexcept { return tokens_.size(); }

  TokenId id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnkId : it->second;
  }

  bool contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

  const std::string& token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
      throw DataError("vocab: id " + std::to_string(id) + " out of range");
    }
    return tokens_[static_cast<std::size_t>(id)];
  }

  /// Corpus tokens only, in id order.
  std::vector<std::string> corpus_tokens() const {
    return {tokens_.begin() + kNumReserved, tokens_.end()};
  }

  /// Four reserved-token header lines, then one corpus token per line.
  std::string serialize() const {
    std::string out;
    for (const auto& t : tokens_) {
      out += t;
      out.push_back('\n');
    }
    return out;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write vocab file " + path.string());
    os << serialize();
    if (!os) throw IoError("failed writing vocab file " + path.string());
  }

  static Vocab parse(std::string_view text) {
    std::vector<std::string> lines;
    std::istringstream is{std::string(text)};
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
    if (lines.size() < kNumReserved) throw DataError("vocab: missing reserved-token header");
    for (std::size_t i = 0; i < kNumReserved; ++i) {
      if (lines[i] != kReservedTokens[i]) {
        throw DataError("vocab: line " + std::to_string(i + 1) + " should be " + std::string(kReservedTokens[i]));
      }
    }
    return Vocab(std::vector<std::string>(lines.begin() + kNumReserved, lines.end()));
  }

  static Vocab load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read vocab file " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
  }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  void reindex() {
    index_.clear();
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<TokenId>(i));
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Counts tokens over `lines`; keeps those seen at least `min_count` times,
/// ordered by descending frequency and then lexicographically.
template <class Range>
Vocab build_vocab(const Range& lines, std::size_t min_count = 1) {
  std::map<std::string, std::size_t> counts;
  std::size_t n_lines = 0;
  for (const auto& line : lines) {
    ++n_lines;
    for (auto& tok : tokenize(line)) ++counts[tok];
  }
  if (n_lines == 0) throw DataError("build_vocab: empty corpus");
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, c] : counts) {
    const bool reserved = std::find(kReservedTokens.begin(), kReservedTokens.end(), tok) != kReservedTokens.end();
    if (c >= min_count && !reserved) kept.emplace_back(tok, c);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, c] : kept) tokens.push_back(tok);
  return Vocab(std::move(tokens));
}

}  // namespace emogen
