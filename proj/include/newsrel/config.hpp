#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "newsrel/error.hpp"
#include "newsrel/models/classifier.hpp"
#include "newsrel/text_util.hpp"
#include "newsrel/tokenization.hpp"

namespace newsrel {

// Shortest decimal that round-trips.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

// Full hyperparameter record for one training run. Serialized as flat
// key=value lines; see keys() for the accepted names.
struct ExperimentConfig {
  std::string name = "run";
  ModelKind model = ModelKind::encoder;

  TokenizerStrategy tokenizer = TokenizerStrategy::subword;
  std::size_t vocab_size = 1000;
  std::size_t max_len = 64;

  std::size_t epochs = 5;
  double learning_rate = 3e-4;
  std::size_t batch_size = 32;
  std::uint64_t seed = 42;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double clip_norm = 1.0;

  std::size_t num_layers = 4;
  std::size_t hidden_size = 32;
  std::size_t num_heads = 4;
  std::size_t ffn_size = 128;
  double hidden_dropout = 0.0;
  double head_dropout = 0.1;

  std::vector<std::size_t> cnn_windows{3, 4, 5};
  std::size_t cnn_maps = 100;
  std::size_t lstm_hidden = 128;
  double baseline_dropout = 0.5;
  std::string vectors;          // word2vec text file (baselines)
  std::string segment_lexicon;  // multi-syllable lexicon (word segmentation)

  double valid_fraction = 0.1;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw ConfigError("learning_rate must be finite and non-negative");
    }
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_len < 3) throw ConfigError("max_len must be >= 3");
    if (max_len > 512) throw ConfigError("max_len must be <= 512");
    if (!(valid_fraction > 0.0 && valid_fraction < 1.0)) throw ConfigError("valid_fraction must lie in (0, 1)");
    if (clip_norm < 0.0) throw ConfigError("clip_norm must be >= 0 (0 disables clipping)");
    if (model == ModelKind::encoder) {
      if (num_layers < 4) throw ConfigError("the [CLS] concatenation head needs num_layers >= 4");
      encoder_config(vocab_size).validate();
      if (head_dropout < 0.0 || head_dropout >= 1.0) throw ConfigError("head_dropout must lie in [0, 1)");
    }
  }

  EncoderConfig encoder_config(std::size_t actual_vocab) const {
    return {num_layers, hidden_size, num_heads, ffn_size, max_len, actual_vocab, hidden_dropout};
  }

  BaselineConfig baseline_config(std::size_t embedding_dim) const {
    BaselineConfig b;
    b.kind = model == ModelKind::bilstm ? BaselineKind::bilstm : BaselineKind::text_cnn;
    b.embedding_dim = embedding_dim;
    b.windows = cnn_windows;
    b.maps_per_window = cnn_maps;
    b.lstm_hidden = lstm_hidden;
    b.dropout = baseline_dropout;
    return b;
  }

  TokenizerSpec tokenizer_spec() const { return {tokenizer, vocab_size, max_len}; }

  std::map<std::string, std::string> to_key_values() const {
    std::vector<std::string> win;
    for (auto w : cnn_windows) win.push_back(std::to_string(w));
    return {
        {"name", name},
        {"model", std::string(to_string(model))},
        {"tokenizer", std::string(to_string(tokenizer))},
        {"vocab_size", std::to_string(vocab_size)},
        {"max_len", std::to_string(max_len)},
        {"epochs", std::to_string(epochs)},
        {"learning_rate", format_double(learning_rate)},
        {"batch_size", std::to_string(batch_size)},
        {"seed", std::to_string(seed)},
        {"adam_beta1", format_double(adam_beta1)},
        {"adam_beta2", format_double(adam_beta2)},
        {"adam_epsilon", format_double(adam_epsilon)},
        {"clip_norm", format_double(clip_norm)},
        {"num_layers", std::to_string(num_layers)},
        {"hidden_size", std::to_string(hidden_size)},
        {"num_heads", std::to_string(num_heads)},
        {"ffn_size", std::to_string(ffn_size)},
        {"hidden_dropout", format_double(hidden_dropout)},
        {"head_dropout", format_double(head_dropout)},
        {"cnn_windows", text::join(win, ",")},
        {"cnn_maps", std::to_string(cnn_maps)},
        {"lstm_hidden", std::to_string(lstm_hidden)},
        {"baseline_dropout", format_double(baseline_dropout)},
        {"vectors", vectors},
        {"segment_lexicon", segment_lexicon},
        {"valid_fraction", format_double(valid_fraction)},
    };
  }

  std::string to_text() const {
    std::string out;
    for (const auto& [k, v] : to_key_values()) out += k + "=" + v + "\n";
    return out;
  }

  // Applies key=value overrides on top of *this. Unknown keys are rejected.
  void apply(const std::map<std::string, std::string>& kv, const std::string& origin = "config") {
    for (const auto& [k, v] : kv) set(k, v, origin);
  }

  void set(const std::string& key, const std::string& value, const std::string& origin = "config") {
    auto bad = [&](const char* what) {
      return ConfigError(origin + ": key '" + key + "': " + what + " (got '" + value + "')");
    };
    auto as_size = [&] {
      auto v = text::parse_int<std::size_t>(value);
      if (!v) throw bad("expected a non-negative integer");
      return *v;
    };
    auto as_double = [&] {
      auto v = text::parse_double(value);
      if (!v) throw bad("expected a number");
      return *v;
    };
    if (key == "name") name = value;
    else if (key == "model") model = parse_model_kind(value);
    else if (key == "tokenizer") tokenizer = parse_strategy(value);
    else if (key == "vocab_size") vocab_size = as_size();
    else if (key == "max_len") max_len = as_size();
    else if (key == "epochs") epochs = as_size();
    else if (key == "learning_rate") learning_rate = as_double();
    else if (key == "batch_size") batch_size = as_size();
    else if (key == "seed") {
      auto v = text::parse_int<std::uint64_t>(value);
      if (!v) throw bad("expected a non-negative integer");
      seed = *v;
    }
    else if (key == "adam_beta1") adam_beta1 = as_double();
    else if (key == "adam_beta2") adam_beta2 = as_double();
    else if (key == "adam_epsilon") adam_epsilon = as_double();
    else if (key == "clip_norm") clip_norm = as_double();
    else if (key == "num_layers") num_layers = as_size();
    else if (key == "hidden_size") hidden_size = as_size();
    else if (key == "num_heads") num_heads = as_size();
    else if (key == "ffn_size") ffn_size = as_size();
    else if (key == "hidden_dropout") hidden_dropout = as_double();
    else if (key == "head_dropout") head_dropout = as_double();
    else if (key == "cnn_windows") {
      cnn_windows.clear();
      for (const auto& part : text::split(value, ',')) {
        auto w = text::parse_int<std::size_t>(part);
        if (!w) throw bad("expected comma-separated window sizes");
        cnn_windows.push_back(*w);
      }
    }
    else if (key == "cnn_maps") cnn_maps = as_size();
    else if (key == "lstm_hidden") lstm_hidden = as_size();
    else if (key == "baseline_dropout") baseline_dropout = as_double();
    else if (key == "vectors") vectors = value;
    else if (key == "segment_lexicon") segment_lexicon = value;
    else if (key == "valid_fraction") valid_fraction = as_double();
    else throw ConfigError(origin + ": unknown key '" + key + "'");
  }

  static ExperimentConfig from_key_values(const std::map<std::string, std::string>& kv,
                                          const std::string& origin = "config") {
    ExperimentConfig c;
    c.apply(kv, origin);
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    return from_key_values(text::parse_key_values(text::read_file(path), path), path);
  }
};

}  // namespace newsrel
