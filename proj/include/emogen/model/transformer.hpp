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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emogen/model/config.hpp"
#include "emogen/numerics/adamw.hpp"
#include "emogen/numerics/ops.hpp"
#include "emogen/numerics/rng.hpp"
#include "emogen/text/sequence.hpp"

namespace emogen {

/// Dropout is active only when `training` is set; it then draws from `rng`.
struct ForwardOptions {
  bool training = false;
  Rng* rng = nullptr;
};

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }
};

struct MultiHeadAttention {
  Linear query, key, value, output;
};

struct FeedForward {
  Linear expand, project;
};

struct EncoderLayer {
  LayerNorm self_attn_norm;
  MultiHeadAttention self_attn;
  LayerNorm ffn_norm;
  FeedForward ffn;
};

struct DecoderLayer {
  LayerNorm self_attn_norm;
  MultiHeadAttention self_attn;
  LayerNorm cross_attn_norm;
  MultiHeadAttention cross_attn;
  LayerNorm ffn_norm;
  FeedForward ffn;
};

/// Decoder input for classification: each utterance row shifted right by one
/// (BOS first, last real token dropped), keeping the row lengths.
inline PaddedBatch shift_right_batch(const PaddedBatch& src) {
  PaddedBatch out = src;
  for (std::size_t b = 0; b < src.batch; ++b) {
    const std::size_t len = src.lengths[b];
    if (len == 0) throw DataError("shift_right_batch: empty row");
    TokenId* row = out.ids.data() + b * src.length;
    for (std::size_t t = len - 1; t > 0; --t) row[t] = src.ids[b * src.length + t - 1];
    row[0] = kBosId;
  }
  return out;
}

/// Shared pre-norm transformer encoder-decoder with one weight-tied LM head
/// and one linear classification head per registered task.
///
/// Parameters live in a single ordered list; the layer structs hold aliases.
/// Move-only, since copying would silently share parameter storage; use
/// clone() for an independent snapshot.
class ModelBundle {
 public:
  explicit ModelBundle(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    const std::size_t d = config_.d_model;
    token_embedding_ = add_param("embed.tokens", {config_.vocab_size, d});
    position_embedding_ = add_param("embed.positions", {config_.max_len, d});
    for (std::size_t i = 0; i < config_.n_enc_layers; ++i) {
      const std::string p = "encoder.layers." + std::to_string(i) + ".";
      EncoderLayer layer;
      layer.self_attn_norm = make_norm(p + "self_attn_norm");
      layer.self_attn = make_attention(p + "self_attn");
      layer.ffn_norm = make_norm(p + "ffn_norm");
      layer.ffn = make_ffn(p + "ffn");
      encoder_.push_back(std::move(layer));
    }
    encoder_norm_ = make_norm("encoder.final_norm");
    for (std::size_t i = 0; i < config_.n_dec_layers; ++i) {
      const std::string p = "decoder.layers." + std::to_string(i) + ".";
      DecoderLayer layer;
      layer.self_attn_norm = make_norm(p + "self_attn_norm");
      layer.self_attn = make_attention(p + "self_attn");
      layer.cross_attn_norm = make_norm(p + "cross_attn_norm");
      layer.cross_attn = make_attention(p + "cross_attn");
      layer.ffn_norm = make_norm(p + "ffn_norm");
      layer.ffn = make_ffn(p + "ffn");
      decoder_.push_back(std::move(layer));
    }
    decoder_norm_ = make_norm("decoder.final_norm");
    for (const auto& h : config_.cls_heads) {
      heads_.emplace(h.task_name, make_linear("heads." + h.task_name, d, h.num_labels));
    }
  }

  ModelBundle(ModelBundle&&) noexcept = default;
  ModelBundle& operator=(ModelBundle&&) noexcept = default;
  ModelBundle(const ModelBundle&) = delete;
  ModelBundle& operator=(const ModelBundle&) = delete;

  /// Seeded initialization: token/position tables ~ N(0, 1/d), weights
  /// ~ N(0, 1/fan_in), biases zero, norm gains one.
  static ModelBundle init(const ModelConfig& config, std::uint64_t seed) {
    ModelBundle m(config);
    Rng rng(derive_seed({seed, 0x1A17ULL}));
    for (auto& p : m.params_) {
      auto values = p.tensor.mutable_values();
      const std::string& n = p.name;
      const bool is_bias = n.ends_with(".bias") || n.ends_with(".beta");
      if (n.ends_with(".gamma")) {
        std::fill(values.begin(), values.end(), 1.0);
      } else if (is_bias) {
        std::fill(values.begin(), values.end(), 0.0);
      } else {
        const double fan_in = n.starts_with("embed.") ? static_cast<double>(config.d_model)
                                                      : static_cast<double>(p.tensor.dim(0));
        const double std_dev = 1.0 / std::sqrt(fan_in);
        for (double& v : values) v = std_dev * rng.normal();
      }
    }
    m.zero_grad();
    return m;
  }

  ModelBundle clone() const {
    ModelBundle m(config_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto src = params_[i].tensor.values();
      std::copy(src.begin(), src.end(), m.params_[i].tensor.mutable_values().begin());
    }
    m.zero_grad();
    return m;
  }

  const ModelConfig& config() const noexcept { return config_; }

  std::span<NamedParameter> parameters() noexcept { return params_; }
  std::span<const NamedParameter> parameters() const noexcept { return params_; }

  const Tensor& parameter(std::string_view name) const {
    for (const auto& p : params_) {
      if (p.name == name) return p.tensor;
    }
    throw ConfigError("model: no parameter named '" + std::string(name) + "'");
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  bool has_head(std::string_view task) const { return heads_.count(std::string(task)) > 0; }

  std::vector<std::string> head_names() const {
    std::vector<std::string> names;
    for (const auto& h : config_.cls_heads) names.push_back(h.task_name);
    return names;
  }

  /// Encoder states [batch, length, d] after the final norm.
  Tensor encode(const PaddedBatch& src, const ForwardOptions& opt = {}) const {
    Tensor x = embed(src, opt);
    for (const auto& layer : encoder_) {
      const AttentionShape shape{src.batch, src.length, src.length, config_.n_heads, src.mask, false};
      Tensor h = layer.self_attn_norm(x);
      x = add(x, drop(attend(layer.self_attn, h, h, shape), opt));
      x = add(x, drop(feed_forward(layer.ffn, layer.ffn_norm(x)), opt));
    }
    return encoder_norm_(x);
  }

  /// Decoder states [batch, tgt_length, d] given encoder states `memory`.
  Tensor decode(const Tensor& memory, const PaddedBatch& src, const PaddedBatch& tgt,
                const ForwardOptions& opt = {}) const {
    if (src.batch != tgt.batch) {
      throw ShapeError("decode: encoder batch " + std::to_string(src.batch) + " vs decoder batch " +
                       std::to_string(tgt.batch));
    }
    if (memory.rows() != src.batch * src.length || memory.cols() != config_.d_model) {
      throw ShapeError("decode: memory " + shape_string(memory.shape()) + " does not match the source batch");
    }
    Tensor x = embed(tgt, opt);
    for (const auto& layer : decoder_) {
      const AttentionShape self_shape{tgt.batch, tgt.length, tgt.length, config_.n_heads, tgt.mask, true};
      const AttentionShape cross_shape{tgt.batch, tgt.length, src.length, config_.n_heads, src.mask, false};
      Tensor h = layer.self_attn_norm(x);
      x = add(x, drop(attend(layer.self_attn, h, h, self_shape), opt));
      h = layer.cross_attn_norm(x);
      x = add(x, drop(attend(layer.cross_attn, h, memory, cross_shape), opt));
      x = add(x, drop(feed_forward(layer.ffn, layer.ffn_norm(x)), opt));
    }
    return decoder_norm_(x);
  }

  /// Tied LM head: hidden [..., d] -> logits [..., vocab].
  Tensor lm_logits(const Tensor& hidden) const { return matmul(hidden, token_embedding_, Transpose::kYes); }

  /// Logits [batch, tgt_length, vocab] for the utterance batch and the
  /// right-shifted response batch.
  Tensor forward_generation(const PaddedBatch& utterances, const PaddedBatch& decoder_inputs,
                            const ForwardOptions& opt = {}) const {
    const Tensor memory = encode(utterances, opt);
    return lm_logits(decode(memory, utterances, decoder_inputs, opt));
  }

  /// Logits [batch, num_labels] of `task`'s head, read at the last real
  /// position of the decoder fed with the right-shifted utterance.
  Tensor forward_classification(const PaddedBatch& utterances, std::string_view task,
                                const ForwardOptions& opt = {}) const {
    auto it = heads_.find(std::string(task));
    if (it == heads_.end()) {
      std::string known;
      for (const auto& h : config_.cls_heads) known += (known.empty() ? "" : ", ") + h.task_name;
      throw ConfigError("model: no classification head '" + std::string(task) + "' (registered: " +
                        (known.empty() ? "none" : known) + ")");
    }
    const PaddedBatch dec_in = shift_right_batch(utterances);
    const Tensor memory = encode(utterances, opt);
    const Tensor hidden = decode(memory, utterances, dec_in, opt);
    std::vector<std::size_t> last(utterances.batch);
    for (std::size_t b = 0; b < utterances.batch; ++b) last[b] = b * utterances.length + utterances.lengths[b] - 1;
    return it->second(gather_rows(hidden, last));
  }

 private:
  Tensor add_param(std::string name, Shape shape) {
    Tensor t = Tensor::zeros(std::move(shape), true);
    params_.push_back({std::move(name), t});
    return t;
  }
  Linear make_linear(const std::string& prefix, std::size_t in, std::size_t out) {
    Linear l;
    l.weight = add_param(prefix + ".weight", {in, out});
    l.bias = add_param(prefix + ".bias", {out});
    return l;
  }
  LayerNorm make_norm(const std::string& prefix) {
    LayerNorm n;
    n.gamma = add_param(prefix + ".gamma", {config_.d_model});
    n.beta = add_param(prefix + ".beta", {config_.d_model});
    return n;
  }
  MultiHeadAttention make_attention(const std::string& prefix) {
    const std::size_t d = config_.d_model;
    return {make_linear(prefix + ".query", d, d), make_linear(prefix + ".key", d, d),
            make_linear(prefix + ".value", d, d), make_linear(prefix + ".output", d, d)};
  }
  FeedForward make_ffn(const std::string& prefix) {
    return {make_linear(prefix + ".expand", config_.d_model, config_.d_ff),
            make_linear(prefix + ".project", config_.d_ff, config_.d_model)};
  }

  Tensor embed(const PaddedBatch& batch, const ForwardOptions& opt) const {
    if (batch.length > config_.max_len) {
      throw ShapeError("model: sequence length " + std::to_string(batch.length) + " exceeds max_len " +
                       std::to_string(config_.max_len));
    }
    std::vector<TokenId> positions(batch.batch * batch.length);
    for (std::size_t b = 0; b < batch.batch; ++b) {
      for (std::size_t t = 0; t < batch.length; ++t) positions[b * batch.length + t] = static_cast<TokenId>(t);
    }
    const Shape shape{batch.batch, batch.length};
    return drop(add(embedding(token_embedding_, batch.ids, shape), embedding(position_embedding_, positions, shape)),
                opt);
  }

  Tensor attend(const MultiHeadAttention& mha, const Tensor& queries, const Tensor& keys,
                const AttentionShape& shape) const {
    return mha.output(attention(mha.query(queries), mha.key(keys), mha.value(keys), shape));
  }

  static Tensor feed_forward(const FeedForward& ffn, const Tensor& x) { return ffn.project(gelu(ffn.expand(x))); }

  Tensor drop(const Tensor& x, const ForwardOptions& opt) const {
    if (!opt.training || config_.dropout <= 0.0) return x;
    if (opt.rng == nullptr) throw ConfigError("model: training forward pass without an rng");
    return dropout(x, config_.dropout, *opt.rng);
  }

  ModelConfig config_;
  std::vector<NamedParameter> params_;
  Tensor token_embedding_;
  Tensor position_embedding_;
  std::vector<EncoderLayer> encoder_;
  LayerNorm encoder_norm_;
  std::vector<DecoderLayer> decoder_;
  LayerNorm decoder_norm_;
  std::map<std::string, Linear> heads_;
};

}  // namespace emogen
