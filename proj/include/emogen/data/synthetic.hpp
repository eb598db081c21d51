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

// Synthetic stand-ins for the dialogue and emotion corpora.
//
// Every emotion keyword belongs to exactly one fine (12-way) label; fine labels
// map onto the 6-way labels and those onto the 2-way polarity, so the three
// classification granularities are nested. Classification texts plant one
// keyword among shared filler words, and generation replies are chosen by the
// 6-way label of the utterance keyword with the utterance's noun copied in.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "emogen/data/dataset.hpp"
#include "emogen/numerics/rng.hpp"

namespace emogen::synthetic {

enum class Granularity { kE2, kE6, kE12 };

struct FineEmotion {
  std::string_view name;
  std::string_view e6;
  std::array<std::string_view, 3> keywords;
};

inline constexpr std::array<FineEmotion, 12> kFineEmotions{{
    {"anger", "anger", {"furious", "enraged", "irate"}},
    {"boredom", "disgust", {"bored", "tedious", "dreary"}},
    {"enthusiasm", "joy", {"eager", "keen", "pumped"}},
    {"fun", "joy", {"playful", "amused", "silly"}},
    {"happiness", "joy", {"happy", "cheerful", "glad"}},
    {"hate", "disgust", {"loathe", "despise", "detest"}},
    {"love", "joy", {"adore", "cherish", "smitten"}},
    {"neutral", "surprise", {"indifferent", "okay", "composed"}},
    {"relief", "joy", {"relieved", "soothed", "unburdened"}},
    {"sadness", "sadness", {"sad", "gloomy", "heartbroken"}},
    {"surprise", "surprise", {"shocked", "astonished", "stunned"}},
    {"worry", "fear", {"anxious", "nervous", "worried"}},
}};

inline const std::vector<std::string>& e6_labels() {
  static const std::vector<std::string> v{"anger", "disgust", "fear", "joy", "sadness", "surprise"};
  return v;
}
inline const std::vector<std::string>& e2_labels() {
  static const std::vector<std::string> v{"positive", "negative"};
  return v;
}
inline const std::vector<std::string>& e12_labels() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (const auto& f : kFineEmotions) out.emplace_back(f.name);
    return out;
  }();
  return v;
}

inline const std::vector<std::string>& labels_for(Granularity g) {
  switch (g) {
    case Granularity::kE2: return e2_labels();
    case Granularity::kE6: return e6_labels();
    case Granularity::kE12: return e12_labels();
  }
  throw std::logic_error("unreachable");
}

inline std::string e6_of_fine(std::string_view fine) {
  for (const auto& f : kFineEmotions) {
    if (f.name == fine) return std::string(f.e6);
  }
  throw DataError("unknown fine emotion '" + std::string(fine) + "'");
}

inline std::string e2_of_e6(std::string_view e6) {
  if (e6 == "joy" || e6 == "surprise") return "positive";
  if (e6 == "anger" || e6 == "disgust" || e6 == "fear" || e6 == "sadness") return "negative";
  throw DataError("unknown 6-way emotion '" + std::string(e6) + "'");
}

inline constexpr std::array<std::string_view, 30> kNouns{
    "weather", "movie",   "exam",  "party",   "job",     "trip",  "dinner", "game",  "concert", "meeting",
    "book",    "news",    "house", "car",     "garden",  "holiday", "train", "phone", "class",   "match",
    "show",    "project", "gift",  "letter",  "song",    "city",  "team",   "picture", "coffee", "weekend"};

inline constexpr std::array<std::string_view, 6> kClassificationTemplates{
    "i feel {kw} about the {noun}",     "the {noun} made me {kw} today",
    "honestly the {noun} leaves me {kw}", "{kw} ! that is how the {noun} makes me feel",
    "my friend said the {noun} was {kw}", "watching the {noun} , i was {kw}"};

inline constexpr std::array<std::string_view, 4> kUtteranceTemplates{
    "i feel {kw} about the {noun}", "the {noun} made me {kw}", "i am so {kw} because of the {noun}",
    "the {noun} ? i am {kw}"};

/// Reply template per 6-way label, in e6_labels() order.
inline constexpr std::array<std::string_view, 6> kReplyTemplates{
    "try to calm down about the {noun}",      "i understand why the {noun} bothers you",
    "do not worry , the {noun} will be fine", "that is wonderful news about the {noun}",
    "i am sorry to hear about the {noun}",    "wow , i did not expect that {noun} either"};

inline std::string fill(std::string_view pattern, std::string_view kw, std::string_view noun) {
  std::string out(pattern);
  auto replace = [&](std::string_view key, std::string_view value) {
    for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + value.size())) {
      out.replace(pos, key.size(), value);
    }
  };
  replace("{kw}", kw);
  replace("{noun}", noun);
  return out;
}

/// The reply the planted mapping assigns to an utterance with this keyword/noun.
inline std::string planted_reply(const FineEmotion& fine, std::string_view noun) {
  const auto& labels = e6_labels();
  const auto idx = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), fine.e6) - labels.begin());
  return fill(kReplyTemplates[idx], "", noun);
}

namespace detail {

/// Uniform over 6-way labels, then uniform over the fine labels inside it.
inline const FineEmotion& draw_emotion(Rng& rng) {
  const auto& e6 = e6_labels()[rng.uniform_index(e6_labels().size())];
  std::vector<const FineEmotion*> members;
  for (const auto& f : kFineEmotions) {
    if (f.e6 == e6) members.push_back(&f);
  }
  return *members[rng.uniform_index(members.size())];
}

inline const FineEmotion& draw_fine(Rng& rng) { return kFineEmotions[rng.uniform_index(kFineEmotions.size())]; }

/// Uniform polarity, then a 6-way label of that polarity, then a fine label.
inline const FineEmotion& draw_polarity(Rng& rng) {
  const auto& polarity = e2_labels()[rng.uniform_index(2)];
  std::vector<std::string> e6s;
  for (const auto& e : e6_labels()) {
    if (e2_of_e6(e) == polarity) e6s.push_back(e);
  }
  const auto& e6 = e6s[rng.uniform_index(e6s.size())];
  std::vector<const FineEmotion*> members;
  for (const auto& f : kFineEmotions) {
    if (f.e6 == e6) members.push_back(&f);
  }
  return *members[rng.uniform_index(members.size())];
}

}  // namespace detail

inline std::vector<GenerationExample> generation_corpus(std::size_t size, std::uint64_t seed) {
  if (size < 10) throw ConfigError("synthetic corpus size must be at least 10");
  Rng rng(derive_seed({seed, 0x6E11ULL}));
  std::vector<GenerationExample> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    const auto& fine = detail::draw_emotion(rng);
    const auto kw = fine.keywords[rng.uniform_index(fine.keywords.size())];
    const auto noun = kNouns[rng.uniform_index(kNouns.size())];
    const auto tmpl = kUtteranceTemplates[rng.uniform_index(kUtteranceTemplates.size())];
    out.push_back({fill(tmpl, kw, noun), planted_reply(fine, noun)});
  }
  return out;
}

inline std::vector<ClassificationExample> classification_corpus(Granularity g, std::size_t size, std::uint64_t seed) {
  if (size < 10) throw ConfigError("synthetic corpus size must be at least 10");
  Rng rng(derive_seed({seed, 0xC1A5ULL, static_cast<std::uint64_t>(g)}));
  std::vector<ClassificationExample> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    const FineEmotion& fine = g == Granularity::kE12  ? detail::draw_fine(rng)
                              : g == Granularity::kE6 ? detail::draw_emotion(rng)
                                                      : detail::draw_polarity(rng);
    const auto kw = fine.keywords[rng.uniform_index(fine.keywords.size())];
    const auto noun = kNouns[rng.uniform_index(kNouns.size())];
    const auto tmpl = kClassificationTemplates[rng.uniform_index(kClassificationTemplates.size())];
    std::string label = g == Granularity::kE12 ? std::string(fine.name)
                        : g == Granularity::kE6 ? std::string(fine.e6)
                                                : e2_of_e6(fine.e6);
    out.push_back({fill(tmpl, kw, noun), std::move(label)});
  }
  return out;
}

}  // namespace emogen::synthetic
