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

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "emogen/numerics/rng.hpp"
#include "emogen/numerics/tensor.hpp"

namespace emogen {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using StridedMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

namespace detail {

inline ConstMatrixMap as_matrix(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return ConstMatrixMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
inline MatrixMap as_matrix(std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return MatrixMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

inline Shape with_last(Shape s, std::size_t last) {
  if (s.empty()) return Shape{last};
  s.back() = last;
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and reductions

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](TensorNode& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      p->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](TensorNode& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.value[i];
    }
  });
}

inline Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (double& v : out) v *= factor;
  return make_result(a.shape(), std::move(out), {a}, [factor](TensorNode& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i] * factor;
  });
}

inline Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_result(Shape{1}, {s}, {a}, [](TensorNode& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    const double g = self.grad[0];
    for (double& pg : p.grad) pg += g;
  });
}

inline Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ShapeError("reshape " + shape_string(a.shape()) + " -> " + shape_string(shape));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result(std::move(shape), std::move(out), {a}, [](TensorNode& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
  });
}

/// Softmax along `axis`, stabilized by subtracting the per-slice maximum.
inline Tensor softmax(const Tensor& logits, std::size_t axis) {
  const Shape& shape = logits.shape();
  if (axis >= shape.size()) {
    throw ShapeError("softmax: axis " + std::to_string(axis) + " out of range for " +
                     shape_string(shape));
  }
  for (double v : logits.values()) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite logit");
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t n = shape[axis];
  const auto in = logits.values();
  std::vector<double> out(in.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) {
      const std::size_t base = o * n * inner + j;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, in[base + k * inner]);
      double denom = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double e = std::exp(in[base + k * inner] - mx);
        out[base + k * inner] = e;
        denom += e;
      }
      for (std::size_t k = 0; k < n; ++k) out[base + k * inner] /= denom;
    }
  }
  return make_result(shape, std::move(out), {logits}, [outer, inner, n](TensorNode& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t j = 0; j < inner; ++j) {
        const std::size_t base = o * n * inner + j;
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) dot += self.grad[base + k * inner] * self.value[base + k * inner];
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t idx = base + k * inner;
          p.grad[idx] += self.value[idx] * (self.grad[idx] - dot);
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Dense layers

enum class Transpose : bool { kNo = false, kYes = true };

/// x[..., k] times w[k, n] (or w[n, k] when transposed). The leading axes of x
/// are flattened into rows.
inline Tensor matmul(const Tensor& x, const Tensor& w, Transpose transpose_w = Transpose::kNo) {
  if (w.rank() != 2) throw ShapeError("matmul: weight must be 2-D, got " + shape_string(w.shape()));
  const bool tw = transpose_w == Transpose::kYes;
  const std::size_t k = tw ? w.dim(1) : w.dim(0);
  const std::size_t n = tw ? w.dim(0) : w.dim(1);
  if (x.cols() != k) {
    throw ShapeError("matmul: inner dimension mismatch " + shape_string(x.shape()) + " * " +
                     shape_string(w.shape()));
  }
  const std::size_t m = x.rows();
  std::vector<double> out(m * n);
  {
    auto xm = detail::as_matrix(x.node()->value, m, k);
    auto om = detail::as_matrix(out, m, n);
    if (tw) {
      om.noalias() = xm * detail::as_matrix(w.node()->value, n, k).transpose();
    } else {
      om.noalias() = xm * detail::as_matrix(w.node()->value, k, n);
    }
  }
  return make_result(detail::with_last(x.shape(), n), std::move(out), {x, w},
                     [m, k, n, tw](TensorNode& self) {
                       auto& px = *self.parents[0];
                       auto& pw = *self.parents[1];
                       const auto g = detail::as_matrix(std::as_const(self.grad), m, n);
                       if (px.requires_grad) {
                         px.ensure_grad();
                         auto gx = detail::as_matrix(px.grad, m, k);
                         if (tw) {
                           gx.noalias() += g * detail::as_matrix(std::as_const(pw.value), n, k);
                         } else {
                           gx.noalias() += g * detail::as_matrix(std::as_const(pw.value), k, n).transpose();
                         }
                       }
                       if (pw.requires_grad) {
                         pw.ensure_grad();
                         const auto xv = detail::as_matrix(std::as_const(px.value), m, k);
                         if (tw) {
                           detail::as_matrix(pw.grad, n, k).noalias() += g.transpose() * xv;
                         } else {
                           detail::as_matrix(pw.grad, k, n).noalias() += xv.transpose() * g;
                         }
                       }
                     });
}

/// Affine map x * w + b with w[in, out] and b[out].
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2 || b.size() != w.dim(1)) {
    throw ShapeError("linear: weight " + shape_string(w.shape()) + " and bias " +
                     shape_string(b.shape()) + " disagree");
  }
  const std::size_t k = w.dim(0);
  const std::size_t n = w.dim(1);
  if (x.cols() != k) {
    throw ShapeError("linear: input " + shape_string(x.shape()) + " vs weight " + shape_string(w.shape()));
  }
  const std::size_t m = x.rows();
  std::vector<double> out(m * n);
  {
    auto om = detail::as_matrix(out, m, n);
    om.noalias() = detail::as_matrix(x.node()->value, m, k) * detail::as_matrix(w.node()->value, k, n);
    const Eigen::Map<const Eigen::RowVectorXd> bias(b.node()->value.data(), static_cast<Eigen::Index>(n));
    om.rowwise() += bias;
  }
  return make_result(detail::with_last(x.shape(), n), std::move(out), {x, w, b},
                     [m, k, n](TensorNode& self) {
                       auto& px = *self.parents[0];
                       auto& pw = *self.parents[1];
                       auto& pb = *self.parents[2];
                       const auto g = detail::as_matrix(std::as_const(self.grad), m, n);
                       if (px.requires_grad) {
                         px.ensure_grad();
                         detail::as_matrix(px.grad, m, k).noalias() +=
                             g * detail::as_matrix(std::as_const(pw.value), k, n).transpose();
                       }
                       if (pw.requires_grad) {
                         pw.ensure_grad();
                         detail::as_matrix(pw.grad, k, n).noalias() +=
                             detail::as_matrix(std::as_const(px.value), m, k).transpose() * g;
                       }
                       if (pb.requires_grad) {
                         pb.ensure_grad();
                         for (std::size_t r = 0; r < m; ++r) {
                           for (std::size_t c = 0; c < n; ++c) pb.grad[c] += self.grad[r * n + c];
                         }
                       }
                     });
}

/// Exact (erf-based) GELU.
inline Tensor gelu(const Tensor& x) {
  const auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = 0.5 * in[i] * (1.0 + std::erf(in[i] * std::numbers::sqrt2 / 2.0));
  }
  return make_result(x.shape(), std::move(out), {x}, [](TensorNode& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double v = p.value[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      p.grad[i] += self.grad[i] * (cdf + v * pdf);
    }
  });
}

/// Row-wise layer normalization with affine gain and shift.
inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5) {
  const std::size_t n = x.cols();
  const std::size_t m = x.rows();
  if (gamma.size() != n || beta.size() != n) {
    throw ShapeError("layer_norm: gain/shift size does not match " + shape_string(x.shape()));
  }
  const auto in = x.values();
  const auto g = gamma.values();
  const auto b = beta.values();
  std::vector<double> out(in.size());
  std::vector<double> xhat(in.size());
  std::vector<double> inv_std(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = in.data() + r * n;
    double mean = 0.0;
    for (std::size_t c = 0; c < n; ++c) mean += row[c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t c = 0; c < n; ++c) {
      const double h = (row[c] - mean) * is;
      xhat[r * n + c] = h;
      out[r * n + c] = h * g[c] + b[c];
    }
  }
  return make_result(x.shape(), std::move(out), {x, gamma, beta},
                     [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](TensorNode& self) {
                       auto& px = *self.parents[0];
                       auto& pg = *self.parents[1];
                       auto& pb = *self.parents[2];
                       if (pg.requires_grad) pg.ensure_grad();
                       if (pb.requires_grad) pb.ensure_grad();
                       if (px.requires_grad) px.ensure_grad();
                       std::vector<double> dxhat(n);
                       for (std::size_t r = 0; r < m; ++r) {
                         const double* gy = self.grad.data() + r * n;
                         const double* h = xhat.data() + r * n;
                         double mean_d = 0.0, mean_dh = 0.0;
                         for (std::size_t c = 0; c < n; ++c) {
                           if (pg.requires_grad) pg.grad[c] += gy[c] * h[c];
                           if (pb.requires_grad) pb.grad[c] += gy[c];
                           dxhat[c] = gy[c] * pg.value[c];
                           mean_d += dxhat[c];
                           mean_dh += dxhat[c] * h[c];
                         }
                         if (!px.requires_grad) continue;
                         mean_d /= static_cast<double>(n);
                         mean_dh /= static_cast<double>(n);
                         double* gx = px.grad.data() + r * n;
                         for (std::size_t c = 0; c < n; ++c) {
                           gx[c] += inv_std[r] * (dxhat[c] - mean_d - h[c] * mean_dh);
                         }
                       }
                     });
}

/// Row lookup table[ids[i], :] for each id; output shape is `out_shape` + [d].
inline Tensor embedding(const Tensor& table, std::span<const std::int32_t> ids, Shape out_shape) {
  if (table.rank() != 2) throw ShapeError("embedding: table must be 2-D");
  if (numel(out_shape) != ids.size()) throw ShapeError("embedding: id count does not match output shape");
  const std::size_t vocab = table.dim(0);
  const std::size_t d = table.dim(1);
  const auto tv = table.values();
  std::vector<double> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw ShapeError("embedding: id " + std::to_string(ids[i]) + " outside table of " +
                       std::to_string(vocab) + " rows");
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
  }
  out_shape.push_back(d);
  std::vector<std::int32_t> kept(ids.begin(), ids.end());
  return make_result(std::move(out_shape), std::move(out), {table},
                     [d, kept = std::move(kept)](TensorNode& self) {
                       auto& p = *self.parents[0];
                       p.ensure_grad();
                       for (std::size_t i = 0; i < kept.size(); ++i) {
                         double* dst = p.grad.data() + static_cast<std::size_t>(kept[i]) * d;
                         const double* src = self.grad.data() + i * d;
                         for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
                       }
                     });
}

/// Selects rows of a [rows x d] view; output is [indices.size() x d].
inline Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices) {
  const std::size_t d = x.cols();
  const std::size_t m = x.rows();
  const auto xv = x.values();
  std::vector<double> out(indices.size() * d);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m) throw ShapeError("gather_rows: row index out of range");
    std::copy_n(xv.data() + indices[i] * d, d, out.data() + i * d);
  }
  std::vector<std::size_t> kept(indices.begin(), indices.end());
  return make_result(Shape{indices.size(), d}, std::move(out), {x},
                     [d, kept = std::move(kept)](TensorNode& self) {
                       auto& p = *self.parents[0];
                       p.ensure_grad();
                       for (std::size_t i = 0; i < kept.size(); ++i) {
                         for (std::size_t c = 0; c < d; ++c) p.grad[kept[i] * d + c] += self.grad[i * d + c];
                       }
                     });
}

/// Inverted dropout. Identity when `rate` is zero.
inline Tensor dropout(const Tensor& x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw NumericError("dropout: rate must be below 1");
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (double& m : mask) m = rng.bernoulli(rate) ? 0.0 : keep_scale;
  const auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * mask[i];
  return make_result(x.shape(), std::move(out), {x}, [mask = std::move(mask)](TensorNode& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i] * mask[i];
  });
}

// ---------------------------------------------------------------------------
// Attention

struct AttentionShape {
  std::size_t batch = 1;
  std::size_t query_len = 1;
  std::size_t key_len = 1;
  std::size_t heads = 1;
  /// batch x key_len; zero marks a padded key that may not be attended.
  std::span<const std::uint8_t> key_mask;
  /// Query position i may only attend key positions j <= i.
  bool causal = false;
};

/// Scaled dot-product attention over all heads at once.
///
/// q is [batch * query_len, d]; k and v are [batch * key_len, d]; heads split
/// d into contiguous slices. Returns [batch * query_len, d] (before the output
/// projection). A query row whose keys are all masked yields zeros.
inline Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionShape& spec) {
  const std::size_t d = q.cols();
  if (k.cols() != d || v.cols() != d) throw ShapeError("attention: model widths disagree");
  if (d % spec.heads != 0) throw ShapeError("attention: width not divisible by head count");
  if (q.rows() != spec.batch * spec.query_len || k.rows() != spec.batch * spec.key_len ||
      v.rows() != spec.batch * spec.key_len) {
    throw ShapeError("attention: row counts do not match batch/length");
  }
  if (!spec.key_mask.empty() && spec.key_mask.size() != spec.batch * spec.key_len) {
    throw ShapeError("attention: key mask size mismatch");
  }
  const std::size_t B = spec.batch, Tq = spec.query_len, Tk = spec.key_len, H = spec.heads;
  const std::size_t dh = d / H;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto stride = Eigen::OuterStride<>(static_cast<Eigen::Index>(d));
  const auto eTq = static_cast<Eigen::Index>(Tq);
  const auto eTk = static_cast<Eigen::Index>(Tk);
  const auto edh = static_cast<Eigen::Index>(dh);

  // allowed[b][i][j]
  std::vector<std::uint8_t> allowed(B * Tq * Tk, 1);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < Tq; ++i) {
      for (std::size_t j = 0; j < Tk; ++j) {
        bool ok = spec.key_mask.empty() || spec.key_mask[b * Tk + j] != 0;
        if (spec.causal && j > i) ok = false;
        allowed[(b * Tq + i) * Tk + j] = ok ? 1 : 0;
      }
    }
  }

  std::vector<double> probs(B * H * Tq * Tk, 0.0);
  std::vector<double> out(B * Tq * d, 0.0);
  const double* qd = q.values().data();
  const double* kd = k.values().data();
  const double* vd = v.values().data();
  RowMatrix scores(eTq, eTk);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t h = 0; h < H; ++h) {
      ConstStridedMap qm(qd + b * Tq * d + h * dh, eTq, edh, stride);
      ConstStridedMap km(kd + b * Tk * d + h * dh, eTk, edh, stride);
      ConstStridedMap vm(vd + b * Tk * d + h * dh, eTk, edh, stride);
      scores.noalias() = qm * km.transpose();
      MatrixMap pm(probs.data() + (b * H + h) * Tq * Tk, eTq, eTk);
      for (std::size_t i = 0; i < Tq; ++i) {
        const std::uint8_t* ok = allowed.data() + (b * Tq + i) * Tk;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < Tk; ++j) {
          if (ok[j]) mx = std::max(mx, scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * inv_scale);
        }
        if (!std::isfinite(mx)) continue;
        double denom = 0.0;
        for (std::size_t j = 0; j < Tk; ++j) {
          const auto ei = static_cast<Eigen::Index>(i);
          const auto ej = static_cast<Eigen::Index>(j);
          const double e = ok[j] ? std::exp(scores(ei, ej) * inv_scale - mx) : 0.0;
          pm(ei, ej) = e;
          denom += e;
        }
        pm.row(static_cast<Eigen::Index>(i)) /= denom;
      }
      StridedMap om(out.data() + b * Tq * d + h * dh, eTq, edh, stride);
      om.noalias() = pm * vm;
    }
  }

  return make_result(q.shape(), std::move(out), {q, k, v},
                     [B, Tq, Tk, H, d, dh, inv_scale, probs = std::move(probs)](TensorNode& self) {
                       auto& pq = *self.parents[0];
                       auto& pk = *self.parents[1];
                       auto& pv = *self.parents[2];
                       if (pq.requires_grad) pq.ensure_grad();
                       if (pk.requires_grad) pk.ensure_grad();
                       if (pv.requires_grad) pv.ensure_grad();
                       const auto stride = Eigen::OuterStride<>(static_cast<Eigen::Index>(d));
                       const auto eTq = static_cast<Eigen::Index>(Tq);
                       const auto eTk = static_cast<Eigen::Index>(Tk);
                       const auto edh = static_cast<Eigen::Index>(dh);
                       RowMatrix dp(eTq, eTk);
                       for (std::size_t b = 0; b < B; ++b) {
                         for (std::size_t h = 0; h < H; ++h) {
                           ConstMatrixMap pm(probs.data() + (b * H + h) * Tq * Tk, eTq, eTk);
                           ConstStridedMap go(self.grad.data() + b * Tq * d + h * dh, eTq, edh, stride);
                           ConstStridedMap qm(pq.value.data() + b * Tq * d + h * dh, eTq, edh, stride);
                           ConstStridedMap km(pk.value.data() + b * Tk * d + h * dh, eTk, edh, stride);
                           ConstStridedMap vm(pv.value.data() + b * Tk * d + h * dh, eTk, edh, stride);
                           if (pv.requires_grad) {
                             StridedMap gv(pv.grad.data() + b * Tk * d + h * dh, eTk, edh, stride);
                             gv.noalias() += pm.transpose() * go;
                           }
                           if (!pq.requires_grad && !pk.requires_grad) continue;
                           dp.noalias() = go * vm.transpose();
                           // Softmax Jacobian, then the 1/sqrt(dh) scale.
                           for (Eigen::Index i = 0; i < eTq; ++i) {
                             const double dot = dp.row(i).dot(pm.row(i));
                             for (Eigen::Index j = 0; j < eTk; ++j) {
                               dp(i, j) = pm(i, j) * (dp(i, j) - dot) * inv_scale;
                             }
                           }
                           if (pq.requires_grad) {
                             StridedMap gq(pq.grad.data() + b * Tq * d + h * dh, eTq, edh, stride);
                             gq.noalias() += dp * km;
                           }
                           if (pk.requires_grad) {
                             StridedMap gk(pk.grad.data() + b * Tk * d + h * dh, eTk, edh, stride);
                             gk.noalias() += dp.transpose() * qm;
                           }
                         }
                       }
                     });
}

}  // namespace emogen
