#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>

#include "newsrel/autograd.hpp"
#include "newsrel/error.hpp"
#include "newsrel/parameters.hpp"

namespace newsrel {

// MLP over the concatenated [CLS] vectors: 4H -> H (tanh) -> dropout -> 2.
class ClsConcatHead {
 public:
  ClsConcatHead(std::size_t hidden_size, double dropout, ParameterSet& params,
                const std::string& prefix = "head.")
      : hidden_(hidden_size), dropout_(dropout) {
    w1_ = &params.add(prefix + "dense.weight", 4 * hidden_size, hidden_size);
    b1_ = &params.add(prefix + "dense.bias", 1, hidden_size);
    w2_ = &params.add(prefix + "out.weight", hidden_size, 2);
    b2_ = &params.add(prefix + "out.bias", 1, 2);
  }

  void initialize(Rng& rng) {
    init::xavier_uniform(*w1_, rng);
    init::constant(*b1_, 0.0);
    init::xavier_uniform(*w2_, rng);
    init::constant(*b2_, 0.0);
  }

  std::size_t input_width() const { return 4 * hidden_; }

  Var forward(Tape& t, Var features, Rng* dropout_rng = nullptr) const {
    const auto& f = t.value(features);
    if (f.rows != 1 || f.cols != input_width()) {
      throw ConfigError("head expects 1 x " + std::to_string(input_width()) + " features");
    }
    if (!f.all_finite()) throw NumericError("head received non-finite features");
    Var h = ag::tanh(t, ag::add_bias(t, ag::matmul(t, features, t.param(*w1_)), t.param(*b1_)));
    h = ag::dropout(t, h, dropout_, dropout_rng);
    return ag::add_bias(t, ag::matmul(t, h, t.param(*w2_)), t.param(*b2_));
  }

 private:
  std::size_t hidden_;
  double dropout_;
  Parameter* w1_;
  Parameter* b1_;
  Parameter* w2_;
  Parameter* b2_;
};

struct ClassProbabilities {
  std::array<double, 2> logits{};
  std::array<double, 2> probs{};

  double positive() const { return probs[1]; }
};

inline ClassProbabilities softmax2(double l0, double l1) {
  ClassProbabilities out;
  out.logits = {l0, l1};
  const auto lp = ag::log_softmax(std::array<double, 2>{l0, l1});
  out.probs = {std::exp(lp[0]), std::exp(lp[1])};
  return out;
}

inline ClassProbabilities head_forward(const ClsConcatHead& head, std::span<const double> features) {
  Tape t(false);
  const Var logits = head.forward(t, t.constant(Matrix::row_vector(features)));
  const auto& l = t.value(logits);
  return softmax2(l.data[0], l.data[1]);
}

}  // namespace newsrel
