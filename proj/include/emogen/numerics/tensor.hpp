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
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "emogen/errors.hpp"

namespace emogen {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace detail {
inline thread_local bool grad_mode_enabled = true;
}  // namespace detail

inline bool grad_enabled() noexcept { return detail::grad_mode_enabled; }

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() noexcept : previous_(detail::grad_mode_enabled) { detail::grad_mode_enabled = false; }
  ~NoGradGuard() { detail::grad_mode_enabled = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// One vertex of the reverse-mode graph. Leaves carry parameters or inputs;
/// interior nodes carry a closure that pushes their gradient to `parents`.
struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  bool has_grad() const noexcept { return !grad.empty() && grad.size() == value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

/// Shared handle to a dense row-major array of doubles with an optional
/// gradient record. Copying a Tensor aliases the same storage.
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false)
      : node_(std::make_shared<TensorNode>()) {
    if (numel(shape) != values.size()) {
      throw ShapeError("tensor shape " + shape_string(shape) + " does not match " +
                       std::to_string(values.size()) + " values");
    }
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const std::size_t n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return Tensor(Shape{1}, std::vector<double>{v}, requires_grad);
  }

  static Tensor from_node(std::shared_ptr<TensorNode> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

  bool defined() const noexcept { return static_cast<bool>(node_); }

  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  /// Size of the trailing axis; the tensor is viewed as rows() x cols().
  std::size_t cols() const { return node_->shape.empty() ? 1 : node_->shape.back(); }
  std::size_t rows() const { return cols() == 0 ? 0 : size() / cols(); }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  double item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool is_leaf() const { return node_->is_leaf; }

  bool has_grad() const { return node_->has_grad(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  /// Allocates the gradient buffer (if needed) and fills it with zeros.
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }
  void clear_grad() { node_->grad.clear(); }

  TensorNode* node() const noexcept { return node_.get(); }
  const std::shared_ptr<TensorNode>& shared_node() const noexcept { return node_; }

  /// Deep copy of shape and values, detached from any graph.
  Tensor clone(bool requires_grad = false) const {
    return Tensor(node_->shape, node_->value, requires_grad);
  }

  void backward() const;

 private:
  std::shared_ptr<TensorNode> node_;
};

/// Creates the output node of an operation. The closure is only attached when
/// recording is on and at least one input needs a gradient.
inline Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                          std::function<void(TensorNode&)> backward_fn) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (grad_enabled()) {
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->is_leaf = false;
      node->parents.reserve(inputs.size());
      for (auto& in : inputs) node->parents.push_back(in.shared_node());
      node->backward_fn = std::move(backward_fn);
    }
  }
  return Tensor::from_node(std::move(node));
}

/// Reverse pass from a scalar. Leaf gradients accumulate across calls;
/// interior gradients are recomputed each call.
inline void Tensor::backward() const {
  if (size() != 1) {
    throw ShapeError("backward() requires a scalar loss, got shape " + shape_string(shape()));
  }
  if (!requires_grad()) return;

  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      TensorNode* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (TensorNode* n : order) {
    if (!n->is_leaf) n->grad.assign(n->value.size(), 0.0);
  }
  node_->ensure_grad();
  node_->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (!n->is_leaf && n->backward_fn) n->backward_fn(*n);
  }

  for (TensorNode* n : order) {
    if (!n->is_leaf) continue;
    for (double g : n->grad) {
      if (!std::isfinite(g)) throw NumericError("backward produced a non-finite gradient");
    }
  }
}

}  // namespace emogen
