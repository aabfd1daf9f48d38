#pragma once

// Static-embedding baselines: Kim-style TextCNN and a masked BiLSTM.

#include <algorithm>
#include <string>
#include <vector>

#include "newsrel/autograd.hpp"
#include "newsrel/error.hpp"
#include "newsrel/parameters.hpp"

namespace newsrel {

enum class BaselineKind { text_cnn, bilstm };

struct BaselineConfig {
  BaselineKind kind = BaselineKind::text_cnn;
  std::size_t embedding_dim = 16;
  std::vector<std::size_t> windows{3, 4, 5};
  std::size_t maps_per_window = 100;
  std::size_t lstm_hidden = 128;
  double dropout = 0.5;

  void validate() const {
    if (embedding_dim == 0) throw ConfigError("embedding_dim must be positive");
    if (kind == BaselineKind::text_cnn) {
      if (windows.empty()) throw ConfigError("TextCNN needs at least one window size");
      for (auto w : windows) {
        if (w < 1) throw ConfigError("TextCNN window sizes must be >= 1");
      }
      if (maps_per_window == 0) throw ConfigError("maps_per_window must be positive");
    } else if (lstm_hidden == 0) {
      throw ConfigError("lstm_hidden must be positive");
    }
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  }
};

class TextCnn {
 public:
  TextCnn(const BaselineConfig& cfg, ParameterSet& params, const std::string& prefix = "cnn.") : cfg_(cfg) {
    cfg_.validate();
    for (auto k : cfg_.windows) {
      const auto p = prefix + "conv" + std::to_string(k) + ".";
      filters_.push_back(&params.add(p + "weight", k * cfg_.embedding_dim, cfg_.maps_per_window));
      biases_.push_back(&params.add(p + "bias", 1, cfg_.maps_per_window));
    }
    out_w_ = &params.add(prefix + "out.weight", cfg_.windows.size() * cfg_.maps_per_window, 2);
    out_b_ = &params.add(prefix + "out.bias", 1, 2);
  }

  void initialize(Rng& rng) {
    for (auto* f : filters_) init::xavier_uniform(*f, rng);
    for (auto* b : biases_) init::constant(*b, 0.0);
    init::xavier_uniform(*out_w_, rng);
    init::constant(*out_b_, 0.0);
  }

  // input: T x embedding_dim. Sequences shorter than the widest window are
  // zero-padded.
  Var forward(Tape& t, Var input, Rng* dropout_rng = nullptr) const {
    if (t.value(input).cols != cfg_.embedding_dim) throw ConfigError("TextCNN: input width differs from embedding_dim");
    const auto widest = *std::max_element(cfg_.windows.begin(), cfg_.windows.end());
    const Var x = ag::pad_rows(t, input, widest);
    std::vector<Var> pooled;
    for (std::size_t i = 0; i < cfg_.windows.size(); ++i) {
      const Var windows = ag::unfold_rows(t, x, cfg_.windows[i]);
      const Var conv = ag::add_bias(t, ag::matmul(t, windows, t.param(*filters_[i])), t.param(*biases_[i]));
      pooled.push_back(ag::max_rows(t, ag::relu(t, conv)));
    }
    Var features = ag::concat_cols(t, pooled);
    features = ag::dropout(t, features, cfg_.dropout, dropout_rng);
    return ag::add_bias(t, ag::matmul(t, features, t.param(*out_w_)), t.param(*out_b_));
  }

 private:
  BaselineConfig cfg_;
  std::vector<Parameter*> filters_;
  std::vector<Parameter*> biases_;
  Parameter* out_w_;
  Parameter* out_b_;
};

class BiLstm {
 public:
  BiLstm(const BaselineConfig& cfg, ParameterSet& params, const std::string& prefix = "bilstm.") : cfg_(cfg) {
    cfg_.validate();
    const std::size_t h = cfg_.lstm_hidden;
    for (const char* dir : {"forward.", "backward."}) {
      Direction d;
      d.wx = &params.add(prefix + dir + "input.weight", cfg_.embedding_dim, 4 * h);
      d.wh = &params.add(prefix + dir + "recurrent.weight", h, 4 * h);
      d.b = &params.add(prefix + dir + "bias", 1, 4 * h);
      dirs_.push_back(d);
    }
    out_w_ = &params.add(prefix + "out.weight", 2 * h, 2);
    out_b_ = &params.add(prefix + "out.bias", 1, 2);
  }

  // Gate order within the 4H block: input, forget, cell, output. The forget
  // bias starts at 1.
  void initialize(Rng& rng) {
    const std::size_t h = cfg_.lstm_hidden;
    for (auto& d : dirs_) {
      init::xavier_uniform(*d.wx, rng);
      init::xavier_uniform(*d.wh, rng);
      init::constant(*d.b, 0.0);
      for (std::size_t c = h; c < 2 * h; ++c) d.b->value.data[c] = 1.0;
    }
    init::xavier_uniform(*out_w_, rng);
    init::constant(*out_b_, 0.0);
  }

  // Runs both directions over mask-1 rows only; PAD rows never enter.
  Var forward(Tape& t, Var input, std::span<const std::uint8_t> mask, Rng* dropout_rng = nullptr) const {
    const auto& in = t.value(input);
    if (in.cols != cfg_.embedding_dim) throw ConfigError("BiLSTM: input width differs from embedding_dim");
    if (mask.size() != in.rows) throw ConfigError("BiLSTM: mask length differs from sequence length");
    std::vector<std::size_t> real;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) real.push_back(i);
    }
    const std::size_t h = cfg_.lstm_hidden;
    std::vector<Var> finals;
    if (real.empty()) {
      finals.push_back(t.constant(Matrix(1, h)));
      finals.push_back(t.constant(Matrix(1, h)));
    } else {
      const Var seq = ag::select_rows(t, input, real);
      finals.push_back(run_direction(t, seq, dirs_[0], false));
      finals.push_back(run_direction(t, seq, dirs_[1], true));
    }
    Var rep = ag::concat_cols(t, finals);
    rep = ag::dropout(t, rep, cfg_.dropout, dropout_rng);
    return ag::add_bias(t, ag::matmul(t, rep, t.param(*out_w_)), t.param(*out_b_));
  }

 private:
  struct Direction {
    Parameter* wx;
    Parameter* wh;
    Parameter* b;
  };

  Var run_direction(Tape& t, Var seq, const Direction& d, bool reverse) const {
    const std::size_t h = cfg_.lstm_hidden;
    const std::size_t steps = t.value(seq).rows;
    const Var xw = ag::add_bias(t, ag::matmul(t, seq, t.param(*d.wx)), t.param(*d.b));
    const Var wh = t.param(*d.wh);
    Var hs = t.constant(Matrix(1, h));
    Var cs = t.constant(Matrix(1, h));
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t row = reverse ? steps - 1 - s : s;
      Var gates = ag::slice_rows(t, xw, row, 1);
      if (s > 0) gates = ag::add(t, gates, ag::matmul(t, hs, wh));
      const Var i = ag::sigmoid(t, ag::slice_cols(t, gates, 0, h));
      const Var f = ag::sigmoid(t, ag::slice_cols(t, gates, h, h));
      const Var g = ag::tanh(t, ag::slice_cols(t, gates, 2 * h, h));
      const Var o = ag::sigmoid(t, ag::slice_cols(t, gates, 3 * h, h));
      cs = s == 0 ? ag::mul(t, i, g) : ag::add(t, ag::mul(t, f, cs), ag::mul(t, i, g));
      hs = ag::mul(t, o, ag::tanh(t, cs));
    }
    return hs;
  }

  BaselineConfig cfg_;
  std::vector<Direction> dirs_;
  Parameter* out_w_;
  Parameter* out_b_;
};

}  // namespace newsrel
