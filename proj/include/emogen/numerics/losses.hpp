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

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "emogen/numerics/tensor.hpp"

namespace emogen {

/// Target marker for positions excluded from a sequence loss.
inline constexpr std::int32_t kIgnoreIndex = -100;

namespace detail {

/// log-sum-exp of one row, max-subtracted.
inline double row_logsumexp(const double* row, std::size_t n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, row[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(row[i] - mx);
  return mx + std::log(s);
}

inline void require_finite(std::span<const double> v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string(op) + ": non-finite logit");
  }
}

}  // namespace detail

/// Mean over non-ignored rows of
///   -[(1 - eps) * log p(target) + eps * mean_v log p(v)]
/// where p is the softmax of each row of `logits` ([..., V]). The smoothing
/// mass is spread over the full vocabulary, target included.
inline Tensor label_smoothed_nll(const Tensor& logits, std::span<const std::int32_t> targets, double epsilon,
                                 std::int32_t ignore_index = kIgnoreIndex) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw NumericError("label_smoothed_nll: epsilon must be in [0, 1)");
  const std::size_t V = logits.cols();
  const std::size_t T = logits.rows();
  if (targets.size() != T) {
    throw ShapeError("label_smoothed_nll: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(T) + " rows");
  }
  detail::require_finite(logits.values(), "label_smoothed_nll");
  const double* z = logits.values().data();
  std::vector<double> lse(T, 0.0);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < T; ++t) {
    if (targets[t] == ignore_index) continue;
    if (targets[t] < 0 || static_cast<std::size_t>(targets[t]) >= V) {
      throw ShapeError("label_smoothed_nll: target id " + std::to_string(targets[t]) + " outside vocabulary of " +
                       std::to_string(V));
    }
    const double* row = z + t * V;
    lse[t] = detail::row_logsumexp(row, V);
    const double logp_target = row[targets[t]] - lse[t];
    double sum_logp = 0.0;
    for (std::size_t v = 0; v < V; ++v) sum_logp += row[v] - lse[t];
    total += -((1.0 - epsilon) * logp_target + epsilon * (sum_logp / static_cast<double>(V)));
    ++count;
  }
  if (count == 0) throw NumericError("label_smoothed_nll: every position is ignored");
  const double n = static_cast<double>(count);
  std::vector<std::int32_t> kept(targets.begin(), targets.end());
  return make_result(Shape{1}, {total / n}, {logits},
                     [T, V, n, epsilon, ignore_index, lse = std::move(lse), kept = std::move(kept)](TensorNode& self) {
                       auto& p = *self.parents[0];
                       p.ensure_grad();
                       const double g = self.grad[0] / n;
                       const double uniform = epsilon / static_cast<double>(V);
                       for (std::size_t t = 0; t < T; ++t) {
                         if (kept[t] == ignore_index) continue;
                         const double* row = p.value.data() + t * V;
                         double* grow = p.grad.data() + t * V;
                         for (std::size_t v = 0; v < V; ++v) {
                           const double prob = std::exp(row[v] - lse[t]);
                           const double tgt = uniform + (static_cast<std::int32_t>(v) == kept[t] ? 1.0 - epsilon : 0.0);
                           grow[v] += g * (prob - tgt);
                         }
                       }
                     });
}

/// Mean over rows of -log softmax(logits)[label]. Accepts a single [C] row
/// or a [B, C] batch with one label per row.
inline Tensor classification_nll(const Tensor& logits, std::span<const std::int32_t> labels) {
  const std::size_t C = logits.cols();
  const std::size_t B = logits.rows();
  if (labels.size() != B) {
    throw ShapeError("classification_nll: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(B) + " rows");
  }
  if (B == 0) throw NumericError("classification_nll: empty batch");
  detail::require_finite(logits.values(), "classification_nll");
  const double* z = logits.values().data();
  std::vector<double> lse(B);
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= C) {
      throw ShapeError("classification_nll: label " + std::to_string(labels[b]) + " outside " +
                       std::to_string(C) + " classes");
    }
    const double* row = z + b * C;
    lse[b] = detail::row_logsumexp(row, C);
    const double logp_target = row[labels[b]] - lse[b];
    double sum_logp = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum_logp += row[c] - lse[b];
    // Same arithmetic as label_smoothed_nll at epsilon = 0, so the two agree bit-for-bit.
    total += -((1.0 - 0.0) * logp_target + 0.0 * (sum_logp / static_cast<double>(C)));
  }
  const double n = static_cast<double>(B);
  std::vector<std::int32_t> kept(labels.begin(), labels.end());
  return make_result(Shape{1}, {total / n}, {logits},
                     [B, C, n, lse = std::move(lse), kept = std::move(kept)](TensorNode& self) {
                       auto& p = *self.parents[0];
                       p.ensure_grad();
                       const double g = self.grad[0] / n;
                       for (std::size_t b = 0; b < B; ++b) {
                         const double* row = p.value.data() + b * C;
                         double* grow = p.grad.data() + b * C;
                         for (std::size_t c = 0; c < C; ++c) {
                           const double prob = std::exp(row[c] - lse[b]);
                           grow[c] += g * (prob - (static_cast<std::int32_t>(c) == kept[b] ? 1.0 : 0.0));
                         }
                       }
                     });
}

inline Tensor classification_nll(const Tensor& logits, std::int32_t label) {
  return classification_nll(logits, std::span<const std::int32_t>(&label, 1));
}

}  // namespace emogen
