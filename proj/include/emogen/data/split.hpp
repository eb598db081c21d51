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
#include <cstdint>
#include <numeric>
#include <vector>

#include "emogen/errors.hpp"
#include "emogen/numerics/rng.hpp"

namespace emogen {

template <class T>
struct Splits {
  std::vector<T> train;
  std::vector<T> valid;
  std::vector<T> test;
};

/// Seeded shuffle, then train = floor(0.8 n), the remainder halved between
/// valid and test with any odd item going to test.
template <class T>
Splits<T> split_811(const std::vector<T>& examples, std::uint64_t seed) {
  const std::size_t n = examples.size();
  if (n < 10) throw DataError("split_811: need at least 10 examples, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({seed, 0x5B11ULL}));
  rng.shuffle(order);

  const std::size_t n_train = (n * 8) / 10;
  const std::size_t n_valid = (n - n_train) / 2;
  Splits<T> out;
  out.train.reserve(n_train);
  for (std::size_t i = 0; i < n; ++i) {
    const T& item = examples[order[i]];
    if (i < n_train) {
      out.train.push_back(item);
    } else if (i < n_train + n_valid) {
      out.valid.push_back(item);
    } else {
      out.test.push_back(item);
    }
  }
  return out;
}

/// Uniform sample without replacement of round(fraction * n) items, kept in
/// their original order.
template <class T>
std::vector<T> subsample(const std::vector<T>& examples, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("subsample: fraction must be in (0, 1], got " + std::to_string(fraction));
  }
  const std::size_t n = examples.size();
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (keep >= n) return examples;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({seed, 0x5AB5ULL}));
  // Partial Fisher-Yates: the first `keep` slots become the sample.
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
    std::swap(order[i], order[j]);
  }
  order.resize(keep);
  std::sort(order.begin(), order.end());
  std::vector<T> out;
  out.reserve(keep);
  for (std::size_t idx : order) out.push_back(examples[idx]);
  return out;
}

}  // namespace emogen
