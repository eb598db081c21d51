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

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emogen/errors.hpp"
#include "emogen/numerics/rng.hpp"

namespace emogen {

/// One mini-batch of one task within an epoch.
struct BatchTicket {
  std::string task_name;
  std::size_t batch_index = 0;
  friend bool operator==(const BatchTicket&, const BatchTicket&) = default;
  friend auto operator<=>(const BatchTicket&, const BatchTicket&) = default;
};

struct TaskBatchCount {
  std::string task_name;
  std::size_t batches = 0;
};

/// Stable 64-bit FNV-1a hash of a task name, used as its shuffle stream id.
inline std::uint64_t name_stream(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::size_t batch_count(std::size_t examples, std::size_t batch_size) {
  return (examples + batch_size - 1) / batch_size;
}

/// Pools every mini-batch of every task for one epoch and shuffles the pool
/// with a seed derived from (seed, epoch). Each task is therefore visited in
/// proportion to its number of batches.
inline std::vector<BatchTicket> build_schedule(std::span<const TaskBatchCount> tasks, std::uint64_t epoch,
                                               std::uint64_t seed) {
  if (tasks.empty()) throw ConfigError("build_schedule: no tasks");
  std::vector<BatchTicket> pool;
  for (const auto& t : tasks) {
    if (t.batches == 0) throw DataError("build_schedule: task '" + t.task_name + "' has no train batches");
    for (std::size_t b = 0; b < t.batches; ++b) pool.push_back({t.task_name, b});
  }
  Rng rng(derive_seed({seed, epoch, 0x5C4EDULL}));
  rng.shuffle(pool);
  return pool;
}

/// Example indices of each mini-batch of one task for one epoch: the train
/// split reshuffled per (seed, epoch, task) and cut into consecutive chunks.
inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t examples, std::size_t batch_size,
                                                           std::uint64_t epoch, std::uint64_t seed,
                                                           std::uint64_t task_stream) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(examples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({seed, epoch, task_stream, 0xBA7CULL}));
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < examples; start += batch_size) {
    const std::size_t end = std::min(examples, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

}  // namespace emogen
