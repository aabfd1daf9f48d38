#pragma once

#include <memory>
#include <string>
#include <vector>

#include "newsrel/autograd.hpp"
#include "newsrel/embeddings.hpp"
#include "newsrel/models/baselines.hpp"
#include "newsrel/models/cls_head.hpp"
#include "newsrel/models/encoder.hpp"
#include "newsrel/parameters.hpp"
#include "newsrel/tokenization.hpp"

namespace newsrel {

enum class ModelKind { encoder, text_cnn, bilstm };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::encoder: return "encoder";
    case ModelKind::text_cnn: return "text_cnn";
    case ModelKind::bilstm: return "bilstm";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "encoder") return ModelKind::encoder;
  if (s == "text_cnn") return ModelKind::text_cnn;
  if (s == "bilstm") return ModelKind::bilstm;
  throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

// What a classifier consumes. Encoders read `tokens`; baselines read
// `embedded` (max_len x dim) with `mask` marking real rows.
struct ModelInput {
  TokenizedExample tokens;
  Matrix embedded;
  std::vector<std::uint8_t> mask;
};

class TextClassifier {
 public:
  virtual ~TextClassifier() = default;
  TextClassifier() = default;
  TextClassifier(const TextClassifier&) = delete;
  TextClassifier& operator=(const TextClassifier&) = delete;

  // Logits (1 x 2). dropout_rng == nullptr selects evaluation mode.
  virtual Var logits(Tape& t, const ModelInput& in, Rng* dropout_rng) const = 0;
  virtual void initialize(Rng& rng) = 0;

  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  ClassProbabilities predict(const ModelInput& in) const {
    Tape t(false);
    const auto& l = t.value(logits(t, in, nullptr));
    return softmax2(l.data[0], l.data[1]);
  }

 protected:
  ParameterSet params_;
};

class EncoderClassifier final : public TextClassifier {
 public:
  EncoderClassifier(const EncoderConfig& cfg, double head_dropout)
      : encoder_(cfg, params_), head_(cfg.hidden_size, head_dropout, params_) {}

  void initialize(Rng& rng) override {
    encoder_.initialize(rng);
    head_.initialize(rng);
  }

  // Runs on the mask-1 prefix only. Real positions never attend to padding,
  // so this matches the full-length pass exactly at every real position.
  Var logits(Tape& t, const ModelInput& in, Rng* dropout_rng) const override {
    const auto n = in.tokens.length();
    const std::span<const int> ids(in.tokens.token_ids.data(), n);
    const std::span<const std::uint8_t> mask(in.tokens.attention_mask.data(), n);
    const auto states = encoder_.forward(t, ids, mask, dropout_rng);
    return head_.forward(t, cls_concat(t, states), dropout_rng);
  }

  const Encoder& encoder() const { return encoder_; }
  const ClsConcatHead& head() const { return head_; }

 private:
  Encoder encoder_;
  ClsConcatHead head_;
};

class TextCnnClassifier final : public TextClassifier {
 public:
  explicit TextCnnClassifier(const BaselineConfig& cfg) : cnn_(cfg, params_) {}
  void initialize(Rng& rng) override { cnn_.initialize(rng); }
  Var logits(Tape& t, const ModelInput& in, Rng* dropout_rng) const override {
    return cnn_.forward(t, t.constant(in.embedded), dropout_rng);
  }

 private:
  TextCnn cnn_;
};

class BiLstmClassifier final : public TextClassifier {
 public:
  explicit BiLstmClassifier(const BaselineConfig& cfg) : lstm_(cfg, params_) {}
  void initialize(Rng& rng) override { lstm_.initialize(rng); }
  Var logits(Tape& t, const ModelInput& in, Rng* dropout_rng) const override {
    return lstm_.forward(t, t.constant(in.embedded), in.mask, dropout_rng);
  }

 private:
  BiLstm lstm_;
};

}  // namespace newsrel
