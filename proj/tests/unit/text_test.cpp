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

#include <random>

#include "support.hpp"

using namespace emogen;

TEST(Tokenize, LowercasesAndSplitsPunctuation) {
  EXPECT_EQ(tokenize("Hello,  WORLD!\tok"), (std::vector<std::string>{"hello", ",", "world", "!", "ok"}));
  EXPECT_TRUE(tokenize("   ").empty());
  EXPECT_EQ(tokenize("don't"), (std::vector<std::string>{"don", "'", "t"}));
}

TEST(Tokenize, DetokenizeRoundTripsOnTokenizedText) {
  const std::string s = "wow , i did not expect that movie either";
  EXPECT_EQ(detokenize(tokenize(s)), s);
  EXPECT_EQ(tokenize(detokenize(tokenize("A,b. C"))), tokenize("A,b. C"));
}

TEST(Vocab, ReservedIdsComeFirst) {
  const Vocab v;
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.token(kPadId), "<pad>");
  EXPECT_EQ(v.token(kBosId), "<s>");
  EXPECT_EQ(v.token(kEosId), "</s>");
  EXPECT_EQ(v.token(kUnkId), "<unk>");
  EXPECT_EQ(v.id("never seen"), kUnkId);
}

TEST(Vocab, BuildOrdersByFrequencyThenLexically) {
  const std::vector<std::string> lines{"b a c", "a b", "a d"};
  const Vocab v = build_vocab(lines);
  EXPECT_EQ(v.corpus_tokens(), (std::vector<std::string>{"a", "b", "c", "d"}));
  EXPECT_EQ(v.id("a"), 4);
  const Vocab pruned = build_vocab(lines, 2);
  EXPECT_EQ(pruned.corpus_tokens(), (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW(build_vocab(std::vector<std::string>{}), DataError);
}

TEST(Vocab, SerializeParseRoundTrip) {
  const Vocab v = build_vocab(std::vector<std::string>{"the cat sat", "on the mat ."});
  const Vocab back = Vocab::parse(v.serialize());
  EXPECT_EQ(v, back);
  testing_support::TempDir dir("vocab");
  v.save(dir / "v.txt");
  EXPECT_EQ(Vocab::load(dir / "v.txt"), v);
  EXPECT_THROW(Vocab::parse("<pad>\n<s>\n"), DataError);
  EXPECT_THROW(Vocab::parse("<pad>\n<s>\n</s>\n<unk>\ndup\ndup\n"), DataError);
}

TEST(Sequence, EncodeAppendsEosAndTruncatesPrefix) {
  const Vocab v = build_vocab(std::vector<std::string>{"a b c d e"});
  const TokenSeq s = encode("a b zz", v);
  EXPECT_EQ(s.ids, (std::vector<TokenId>{v.id("a"), v.id("b"), kUnkId, kEosId}));
  const TokenSeq t = encode("a b c d e", v, 3);
  EXPECT_EQ(t.ids, (std::vector<TokenId>{v.id("a"), v.id("b"), kEosId}));
  EXPECT_EQ(encode("", v).ids, (std::vector<TokenId>{kEosId}));
}

TEST(Sequence, DecodeDropsSpecialTokens) {
  const Vocab v = build_vocab(std::vector<std::string>{"hi there"});
  const std::vector<TokenId> ids{kBosId, v.id("hi"), v.id("there"), kEosId, kPadId};
  EXPECT_EQ(decode(ids, v), "hi there");
}

TEST(Sequence, ShiftRightPrependsBosAndDropsLast) {
  TokenSeq t{{7, 8, 9, kEosId}, SeqRole::kResponse};
  const TokenSeq s = shift_right(t);
  EXPECT_EQ(s.ids, (std::vector<TokenId>{kBosId, 7, 8, 9}));
  EXPECT_EQ(s.role, SeqRole::kDecoderInput);
  EXPECT_THROW(shift_right(s), DataError);
  EXPECT_THROW(shift_right(TokenSeq{}), DataError);
}

TEST(Sequence, PadBatchMasksAndTargets) {
  const std::vector<TokenSeq> seqs{{{5, kEosId}}, {{5, 6, 7, kEosId}}};
  const PaddedBatch b = pad_batch(seqs);
  EXPECT_EQ(b.batch, 2u);
  EXPECT_EQ(b.length, 4u);
  EXPECT_EQ(b.ids, (std::vector<TokenId>{5, kEosId, kPadId, kPadId, 5, 6, 7, kEosId}));
  EXPECT_EQ(b.mask, (std::vector<std::uint8_t>{1, 1, 0, 0, 1, 1, 1, 1}));
  EXPECT_EQ(b.lengths, (std::vector<std::size_t>{2, 4}));
  EXPECT_EQ(b.loss_targets()[2], kIgnoreIndex);
  EXPECT_EQ(b.loss_targets()[7], kEosId);
  EXPECT_THROW(pad_batch(std::vector<TokenSeq>{}), DataError);
}

TEST(Sequence, RandomEncodeDecodeRoundTrip) {
  std::mt19937_64 gen(3);
  std::vector<std::string> words{"alpha", "beta", "gamma", "delta", ",", "?"};
  std::vector<std::string> lines;
  for (int i = 0; i < 50; ++i) {
    std::string s;
    for (std::size_t k = 0, n = 1 + gen() % 8; k < n; ++k) s += (k ? " " : "") + words[gen() % words.size()];
    lines.push_back(s);
  }
  const Vocab v = build_vocab(lines);
  for (const auto& l : lines) EXPECT_EQ(decode(encode(l, v).ids, v), l);
}
