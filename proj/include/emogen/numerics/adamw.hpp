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
#include <span>
#include <string>
#include <vector>

#include "emogen/numerics/tensor.hpp"

namespace emogen {

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

struct AdamWConfig {
  double learning_rate = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("adamw: learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("adamw: betas must be in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ConfigError("adamw: epsilon must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("adamw: weight_decay must be non-negative");
  }
};

/// Moment buffers are indexed like the parameter list they were built for.
struct OptimizerState {
  AdamWConfig config;
  std::uint64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  static OptimizerState for_parameters(std::span<const NamedParameter> params, AdamWConfig config = {}) {
    OptimizerState s;
    s.config = config;
    for (const auto& p : params) {
      s.first_moment.emplace_back(p.tensor.size(), 0.0);
      s.second_moment.emplace_back(p.tensor.size(), 0.0);
    }
    return s;
  }
};

/// One bias-corrected Adam update with decoupled weight decay:
///   p <- p - lr * wd * p - lr * m_hat / (sqrt(v_hat) + eps)
/// Gradients are read, never modified.
inline void adamw_step(std::span<NamedParameter> params, OptimizerState& state) {
  if (params.size() != state.first_moment.size()) {
    throw NumericError("adamw_step: optimizer state built for " + std::to_string(state.first_moment.size()) +
                       " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = params[i].tensor;
    if (!t.has_grad()) throw NumericError("adamw_step: parameter '" + params[i].name + "' has no gradient");
    if (state.first_moment[i].size() != t.size()) {
      throw ShapeError("adamw_step: moment buffer of '" + params[i].name + "' does not match its shape");
    }
    for (double g : t.grad()) {
      if (!std::isfinite(g)) throw NumericError("adamw_step: non-finite gradient in '" + params[i].name + "'");
    }
  }

  const AdamWConfig& c = state.config;
  const std::uint64_t step = state.step_count + 1;
  const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].tensor.mutable_values();
    const auto grad = params[i].tensor.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      value[j] -= c.learning_rate * c.weight_decay * value[j];
      value[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
  state.step_count = step;
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm measured before rescaling.
inline double clip_grad_norm(std::span<NamedParameter> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / (norm + 1e-6);
    for (auto& p : params) {
      if (!p.tensor.has_grad()) continue;
      for (double& g : p.tensor.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

}  // namespace emogen
