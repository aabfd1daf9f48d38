#pragma once

// Post-LayerNorm transformer encoder (BERT layout) that exposes every layer's
// hidden states: index 0 is the embedding output, index l the output of
// transformer layer l.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "newsrel/autograd.hpp"
#include "newsrel/error.hpp"
#include "newsrel/parameters.hpp"
#include "newsrel/tokenization.hpp"

namespace newsrel {

struct EncoderConfig {
  std::size_t num_layers = 4;
  std::size_t hidden_size = 32;
  std::size_t num_heads = 4;
  std::size_t ffn_size = 128;
  std::size_t max_positions = 512;
  std::size_t vocab_size = 0;
  double hidden_dropout = 0.0;

  // Reference architecture: 12 layers, 12 heads, 768-wide states.
  static EncoderConfig base(std::size_t vocab_size) {
    return {12, 768, 12, 3072, 512, vocab_size, 0.1};
  }

  void validate() const {
    if (num_layers == 0) throw ConfigError("encoder needs at least one layer");
    if (hidden_size == 0 || num_heads == 0 || hidden_size % num_heads != 0) {
      throw ConfigError("hidden_size must be a positive multiple of num_heads");
    }
    if (ffn_size == 0 || max_positions == 0 || vocab_size == 0) {
      throw ConfigError("encoder sizes must be positive");
    }
  }
};

struct EncoderOutput {
  std::vector<Matrix> hidden_states;  // (L + 1) x [T x H]

  std::size_t num_layers() const { return hidden_states.empty() ? 0 : hidden_states.size() - 1; }
};

class Encoder {
 public:
  Encoder(const EncoderConfig& cfg, ParameterSet& params, const std::string& prefix = "encoder.")
      : cfg_(cfg) {
    cfg_.validate();
    const std::size_t h = cfg_.hidden_size;
    tok_ = &params.add(prefix + "token_embedding", cfg_.vocab_size, h);
    pos_ = &params.add(prefix + "position_embedding", cfg_.max_positions, h);
    emb_gain_ = &params.add(prefix + "embedding_norm.gain", 1, h);
    emb_bias_ = &params.add(prefix + "embedding_norm.bias", 1, h);
    for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
      const auto p = prefix + "layer" + std::to_string(l) + ".";
      Layer layer;
      layer.wq = &params.add(p + "attention.query.weight", h, h);
      layer.bq = &params.add(p + "attention.query.bias", 1, h);
      layer.wk = &params.add(p + "attention.key.weight", h, h);
      layer.bk = &params.add(p + "attention.key.bias", 1, h);
      layer.wv = &params.add(p + "attention.value.weight", h, h);
      layer.bv = &params.add(p + "attention.value.bias", 1, h);
      layer.wo = &params.add(p + "attention.output.weight", h, h);
      layer.bo = &params.add(p + "attention.output.bias", 1, h);
      layer.ln1_gain = &params.add(p + "attention_norm.gain", 1, h);
      layer.ln1_bias = &params.add(p + "attention_norm.bias", 1, h);
      layer.w1 = &params.add(p + "ffn.in.weight", h, cfg_.ffn_size);
      layer.b1 = &params.add(p + "ffn.in.bias", 1, cfg_.ffn_size);
      layer.w2 = &params.add(p + "ffn.out.weight", cfg_.ffn_size, h);
      layer.b2 = &params.add(p + "ffn.out.bias", 1, h);
      layer.ln2_gain = &params.add(p + "ffn_norm.gain", 1, h);
      layer.ln2_bias = &params.add(p + "ffn_norm.bias", 1, h);
      layers_.push_back(layer);
    }
  }

  // Truncated-normal-free BERT-style init: N(0, 0.02) weights, zero biases,
  // unit norm gains.
  void initialize(Rng& rng) {
    init::normal(*tok_, 0.02, rng);
    init::normal(*pos_, 0.02, rng);
    init::constant(*emb_gain_, 1.0);
    init::constant(*emb_bias_, 0.0);
    for (auto& l : layers_) {
      for (auto* w : {l.wq, l.wk, l.wv, l.wo, l.w1, l.w2}) init::normal(*w, 0.02, rng);
      for (auto* b : {l.bq, l.bk, l.bv, l.bo, l.b1, l.b2, l.ln1_bias, l.ln2_bias}) init::constant(*b, 0.0);
      init::constant(*l.ln1_gain, 1.0);
      init::constant(*l.ln2_gain, 1.0);
    }
  }

  const EncoderConfig& config() const { return cfg_; }

  // Records the forward pass on the tape and returns the L + 1 hidden states.
  std::vector<Var> forward(Tape& t, std::span<const int> ids, std::span<const std::uint8_t> mask,
                           Rng* dropout_rng = nullptr) const {
    const std::size_t n = ids.size();
    if (mask.size() != n) throw ConfigError("encoder: ids and mask lengths differ");
    if (n == 0 || n > cfg_.max_positions) {
      throw ConfigError("encoder: sequence length " + std::to_string(n) + " outside [1, " +
                        std::to_string(cfg_.max_positions) + "]");
    }
    for (int id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab_size) {
        throw ConfigError("encoder: token id " + std::to_string(id) + " out of range for vocabulary of " +
                          std::to_string(cfg_.vocab_size));
      }
    }
    std::vector<int> positions(n);
    for (std::size_t i = 0; i < n; ++i) positions[i] = static_cast<int>(i);

    Var x = ag::add(t, ag::gather(t, *tok_, ids), ag::gather(t, *pos_, positions));
    x = ag::layer_norm(t, x, t.param(*emb_gain_), t.param(*emb_bias_));
    std::vector<Var> states{x};

    const std::size_t heads = cfg_.num_heads;
    const std::size_t d = cfg_.hidden_size / heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    for (const auto& l : layers_) {
      const Var q = ag::add_bias(t, ag::matmul(t, x, t.param(*l.wq)), t.param(*l.bq));
      const Var k = ag::add_bias(t, ag::matmul(t, x, t.param(*l.wk)), t.param(*l.bk));
      const Var v = ag::add_bias(t, ag::matmul(t, x, t.param(*l.wv)), t.param(*l.bv));
      std::vector<Var> ctx;
      ctx.reserve(heads);
      for (std::size_t h = 0; h < heads; ++h) {
        const Var qh = ag::slice_cols(t, q, h * d, d);
        const Var kh = ag::slice_cols(t, k, h * d, d);
        const Var vh = ag::slice_cols(t, v, h * d, d);
        const Var scores = ag::scale(t, ag::matmul_nt(t, qh, kh), inv_sqrt_d);
        const Var probs = ag::masked_softmax(t, scores, mask);
        ctx.push_back(ag::matmul(t, probs, vh));
      }
      Var attn = ag::add_bias(t, ag::matmul(t, ag::concat_cols(t, ctx), t.param(*l.wo)), t.param(*l.bo));
      attn = ag::dropout(t, attn, cfg_.hidden_dropout, dropout_rng);
      x = ag::layer_norm(t, ag::add(t, x, attn), t.param(*l.ln1_gain), t.param(*l.ln1_bias));

      Var ffn = ag::gelu(t, ag::add_bias(t, ag::matmul(t, x, t.param(*l.w1)), t.param(*l.b1)));
      ffn = ag::add_bias(t, ag::matmul(t, ffn, t.param(*l.w2)), t.param(*l.b2));
      ffn = ag::dropout(t, ffn, cfg_.hidden_dropout, dropout_rng);
      x = ag::layer_norm(t, ag::add(t, x, ffn), t.param(*l.ln2_gain), t.param(*l.ln2_bias));
      states.push_back(x);
    }
    return states;
  }

  // Evaluation-mode forward over a full fixed-length example.
  EncoderOutput run(const TokenizedExample& ex) const {
    Tape t(false);
    const auto states = forward(t, ex.token_ids, ex.attention_mask);
    EncoderOutput out;
    for (auto s : states) out.hidden_states.push_back(t.value(s));
    return out;
  }

 private:
  struct Layer {
    Parameter *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
    Parameter *ln1_gain, *ln1_bias;
    Parameter *w1, *b1, *w2, *b2;
    Parameter *ln2_gain, *ln2_bias;
  };

  EncoderConfig cfg_;
  Parameter* tok_;
  Parameter* pos_;
  Parameter* emb_gain_;
  Parameter* emb_bias_;
  std::vector<Layer> layers_;
};

inline EncoderOutput encoder_forward(const TokenizedExample& ex, const Encoder& encoder) {
  return encoder.run(ex);
}

inline constexpr std::size_t kClsLayers = 4;

// Position-0 vectors of the top four layers, oldest first: L-3, L-2, L-1, L.
inline std::vector<double> cls_concat(const EncoderOutput& out) {
  const std::size_t layers = out.num_layers();
  if (layers < kClsLayers) {
    throw ConfigError("cls_concat needs at least 4 encoder layers, got " + std::to_string(layers));
  }
  std::vector<double> v;
  for (std::size_t l = layers - kClsLayers + 1; l <= layers; ++l) {
    const auto row = out.hidden_states[l].row(0);
    v.insert(v.end(), row.begin(), row.end());
  }
  return v;
}

// Tape counterpart of cls_concat over recorded states.
inline Var cls_concat(Tape& t, const std::vector<Var>& states) {
  if (states.size() < kClsLayers + 1) {
    throw ConfigError("cls_concat needs at least 4 encoder layers, got " + std::to_string(states.size() - 1));
  }
  std::vector<Var> parts;
  for (std::size_t l = states.size() - kClsLayers; l < states.size(); ++l) {
    parts.push_back(ag::slice_rows(t, states[l], 0, 1));
  }
  return ag::concat_cols(t, parts);
}

}  // namespace newsrel
