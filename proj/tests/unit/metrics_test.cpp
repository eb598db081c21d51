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

#include "emogen/emogen.hpp"
#include "oracles/brute_metrics.hpp"

using namespace emogen;

namespace {

std::vector<std::string> random_corpus(std::mt19937_64& gen, std::size_t n, std::size_t max_words,
                                       std::size_t alphabet) {
  static const std::vector<std::string> words{"the", "cat", "sat", "on", "mat", "dog", "ran", "a", "big", "red"};
  std::uniform_int_distribution<std::size_t> len(0, max_words), pick(0, alphabet - 1);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    const std::size_t k = len(gen);
    for (std::size_t j = 0; j < k; ++j) s += (j ? " " : "") + words[pick(gen)];
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(Bleu, HandComputedExamples) {
  const std::vector<std::string> hyp{"the cat sat"}, ref{"the cat sat down"};
  EXPECT_NEAR(bleu(hyp, ref), 60.2528610478545387678, 1e-9);
  const std::vector<std::string> h2{"a b c"}, r2{"x y z"};
  EXPECT_NEAR(bleu(h2, r2), 31.947155212313623792767, 1e-9);
  EXPECT_DOUBLE_EQ(bleu(ref, ref), 100.0);
}

TEST(Bleu, EmptyHypothesesScoreZero) {
  const std::vector<std::string> hyp{"", ""}, ref{"a b", "c"};
  EXPECT_EQ(bleu(hyp, ref), 0.0);
}

TEST(Bleu, RejectsMismatchedOrEmptyCorpora) {
  const std::vector<std::string> one{"a"}, two{"a", "b"}, none;
  EXPECT_THROW(bleu(one, two), DataError);
  EXPECT_THROW(bleu(none, none), DataError);
}

TEST(Metrics, AgreeWithBruteForceOnRandomCorpora) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + gen() % 8;
    const std::size_t alphabet = 2 + gen() % 9;
    auto hyps = random_corpus(gen, n, 9, alphabet);
    const auto refs = random_corpus(gen, n, 9, alphabet);
    hyps[0] += hyps[0].empty() ? "cat" : " cat";  // at least one hypothesis token
    ASSERT_NEAR(bleu(hyps, refs), oracle::bleu(hyps, refs), 1e-9) << trial;
    ASSERT_NEAR(avg_len(hyps), oracle::avg_len(hyps), 1e-12);
    ASSERT_NEAR(distinct_n(hyps, 1), oracle::distinct(hyps, 1), 1e-12);
    std::size_t bigrams = 0;
    for (const auto& h : hyps) bigrams += oracle::split_spaces(h).size() >= 2;
    if (bigrams > 0) {
      ASSERT_NEAR(distinct_n(hyps, 2), oracle::distinct(hyps, 2), 1e-12);
    } else {
      ASSERT_THROW(distinct_n(hyps, 2), DataError);
    }
  }
}

TEST(Distinct, CountsAcrossTheCorpus) {
  const std::vector<std::string> one{"a b a"};
  EXPECT_DOUBLE_EQ(distinct_n(one, 1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(distinct_n(one, 2), 1.0);
  const std::vector<std::string> two{"a b", "a b"};
  EXPECT_DOUBLE_EQ(distinct_n(two, 1), 0.5);
  EXPECT_DOUBLE_EQ(distinct_n(two, 2), 0.5);
  const std::vector<std::string> shorty{"a", "b"};
  EXPECT_THROW(distinct_n(shorty, 2), DataError);
  EXPECT_THROW(distinct_n(shorty, 0), ConfigError);
}

TEST(AvgLen, CountsWhitespaceWords) {
  const std::vector<std::string> h{"i am fine", "ok then", "see you then friend"};
  EXPECT_DOUBLE_EQ(avg_len(h), 3.0);
  const std::vector<std::string> none;
  EXPECT_THROW(avg_len(none), DataError);
}

TEST(TokenAccuracy, PositionWiseOverLongerLength) {
  const std::vector<std::string> h{"a b c", "x"}, r{"a c c d", "x"};
  EXPECT_DOUBLE_EQ(token_accuracy(h, r), 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(token_accuracy(r, r), 1.0);
}

TEST(Classification, BinaryMacroF1) {
  const std::vector<std::string> labels{"pos", "neg"};
  const std::vector<std::string> pred{"pos", "pos", "neg", "neg"}, gold{"pos", "neg", "pos", "neg"};
  const auto s = classification_scores(pred, gold, labels);
  EXPECT_DOUBLE_EQ(s.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(s.macro_f1, 0.5);
}

TEST(Classification, DegenerateClassifierAndAbsentLabels) {
  const std::vector<std::string> labels{"a", "b", "c"};
  const std::vector<std::string> pred{"a", "a", "a", "a"}, gold{"a", "a", "b", "b"};
  const auto s = classification_scores(pred, gold, labels);
  EXPECT_DOUBLE_EQ(s.accuracy, 0.5);
  // F1(a) = 2/3, F1(b) = 0, F1(c) = 0 since c never appears.
  EXPECT_DOUBLE_EQ(s.macro_f1, (2.0 / 3.0) / 3.0);
}

TEST(Classification, AgreesWithConfusionMatrix) {
  std::mt19937_64 gen(5);
  const std::vector<std::string> labels{"anger", "disgust", "fear", "joy", "sadness", "surprise"};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + gen() % 40, k = 2 + gen() % 5;
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::vector<std::string> pred, gold;
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back(labels[pick(gen)]);
      pred.push_back(gen() % 3 ? gold.back() : labels[pick(gen)]);
    }
    const auto s = classification_scores(pred, gold, labels);
    const auto o = oracle::classification(pred, gold, labels);
    ASSERT_NEAR(s.accuracy, o.accuracy, 1e-12);
    ASSERT_NEAR(s.macro_f1, o.macro_f1, 1e-12);
    ASSERT_GE(s.macro_f1, 0.0);
    ASSERT_LE(s.macro_f1, 1.0);
  }
}

TEST(Classification, RejectsBadInput) {
  const std::vector<std::string> labels{"a", "b"}, one{"a"}, two{"a", "b"}, unknown{"z"}, none;
  EXPECT_THROW(classification_scores(one, two, labels), DataError);
  EXPECT_THROW(classification_scores(unknown, one, labels), DataError);
  EXPECT_THROW(classification_scores(none, none, labels), DataError);
  EXPECT_THROW(classification_scores(one, one, none), ConfigError);
}

TEST(Report, JsonScalesDistinctAndOmitsMissing) {
  const std::vector<std::string> h{"a b a"}, r{"a b a"};
  const auto rep = generation_report(h, r);
  const auto j = report_to_json(rep);
  EXPECT_DOUBLE_EQ(j.at("dist1").get<double>(), 200.0 / 3.0);
  EXPECT_DOUBLE_EQ(j.at("bleu").get<double>(), 100.0 * std::pow(1.0 / 2.0, 0.25));
  EXPECT_FALSE(j.contains("accuracy"));
  EXPECT_EQ(j.at("generation_examples").get<std::size_t>(), 1u);
  const std::vector<std::string> single{"a"};
  const auto rep2 = generation_report(single, single);
  EXPECT_FALSE(rep2.distinct2.has_value());
}
