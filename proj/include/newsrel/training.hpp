#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "newsrel/config.hpp"
#include "newsrel/corpus.hpp"
#include "newsrel/embeddings.hpp"
#include "newsrel/ensemble_eval.hpp"
#include "newsrel/error.hpp"
#include "newsrel/models/classifier.hpp"
#include "newsrel/parameters.hpp"
#include "newsrel/random.hpp"
#include "newsrel/tokenization.hpp"

namespace newsrel {

// External inputs a run needs beyond the corpus.
struct Resources {
  WordSegmenter segmenter;
  std::shared_ptr<const EmbeddingTable> vectors;

  static Resources from_config(const ExperimentConfig& cfg) {
    Resources r;
    if (!cfg.segment_lexicon.empty()) {
      if (!std::filesystem::exists(cfg.segment_lexicon)) {
        throw ConfigError("segment_lexicon file not found: " + cfg.segment_lexicon);
      }
      r.segmenter = WordSegmenter(parse_lexicon(text::read_file(cfg.segment_lexicon)));
    }
    if (cfg.model != ModelKind::encoder) {
      if (cfg.vectors.empty()) throw ConfigError("baseline models need a 'vectors' file");
      if (!std::filesystem::exists(cfg.vectors)) throw ConfigError("vectors file not found: " + cfg.vectors);
      r.vectors = std::make_shared<const EmbeddingTable>(load_vectors(cfg.vectors));
    }
    return r;
  }
};

// Text -> ModelInput for one model family.
class Featurizer {
 public:
  static Featurizer for_encoder(Tokenizer tok) {
    Featurizer f;
    f.tokenizer_ = std::move(tok);
    return f;
  }
  static Featurizer for_baseline(std::shared_ptr<const EmbeddingTable> table, std::size_t max_len) {
    if (!table) throw ConfigError("baseline featurizer needs an embedding table");
    Featurizer f;
    f.table_ = std::move(table);
    f.max_len_ = max_len;
    return f;
  }

  ModelInput prepare(std::string_view text, const std::string& id = {}) const {
    ModelInput in;
    if (tokenizer_) {
      in.tokens = tokenizer_->encode(text, id);
      return in;
    }
    const auto words = text::split_whitespace(text);
    in.embedded = embed_sequence(words, *table_, max_len_);
    in.mask.assign(max_len_, 0);
    std::fill_n(in.mask.begin(), std::min(words.size(), max_len_), 1);
    return in;
  }

  const Tokenizer* tokenizer() const { return tokenizer_ ? &*tokenizer_ : nullptr; }
  const EmbeddingTable* table() const { return table_.get(); }

 private:
  std::optional<Tokenizer> tokenizer_;
  std::shared_ptr<const EmbeddingTable> table_;
  std::size_t max_len_ = 0;
};

// A model with its featurizer and the config that built it.
struct TrainedModel {
  ExperimentConfig config;
  Featurizer featurizer;
  std::unique_ptr<TextClassifier> model;

  double probability(std::string_view text) const { return model->predict(featurizer.prepare(text)).positive(); }
};

inline std::unique_ptr<TextClassifier> make_classifier(const ExperimentConfig& cfg, const Featurizer& feat) {
  switch (cfg.model) {
    case ModelKind::encoder:
      return std::make_unique<EncoderClassifier>(cfg.encoder_config(feat.tokenizer()->vocab().size()),
                                                 cfg.head_dropout);
    case ModelKind::text_cnn:
      return std::make_unique<TextCnnClassifier>(cfg.baseline_config(feat.table()->dimension()));
    case ModelKind::bilstm:
      return std::make_unique<BiLstmClassifier>(cfg.baseline_config(feat.table()->dimension()));
  }
  throw ConfigError("unreachable model kind");
}

// Fresh (untrained) model: tokenizer fit on train_texts for encoders.
inline TrainedModel build_model(const ExperimentConfig& cfg, const std::vector<std::string>& train_texts,
                                const Resources& res) {
  cfg.validate();
  TrainedModel tm{cfg, {}, nullptr};
  if (cfg.model == ModelKind::encoder) {
    tm.featurizer = Featurizer::for_encoder(Tokenizer::train(cfg.tokenizer_spec(), train_texts, cfg.seed, res.segmenter));
  } else {
    tm.featurizer = Featurizer::for_baseline(res.vectors, cfg.max_len);
  }
  tm.model = make_classifier(cfg, tm.featurizer);
  auto init_rng = make_rng({cfg.seed, 0x696e6974ULL});
  tm.model->initialize(init_rng);
  return tm;
}

// Adam with bias correction, constant step size, no weight decay.
class Adam {
 public:
  Adam(const ParameterSet& params, double lr, double beta1, double beta2, double eps)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    for (const auto& p : params.all()) {
      m_.emplace_back(p.value.rows, p.value.cols);
      v_.emplace_back(p.value.rows, p.value.cols);
    }
  }

  void step(ParameterSet& params) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    std::size_t k = 0;
    for (auto& p : params.all()) {
      auto& m = m_[k].data;
      auto& v = v_[k].data;
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad.data[i];
        m[i] = b1_ * m[i] + (1.0 - b1_) * g;
        v[i] = b2_ * v[i] + (1.0 - b2_) * g * g;
        p.value.data[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      }
      ++k;
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

// Scales all gradients so their joint L2 norm is at most max_norm. Returns
// the norm before clipping.
inline double clip_global_norm(ParameterSet& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params.all()) {
    for (double g : p.grad.data) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& p : params.all()) {
      for (auto& g : p.grad.data) g *= s;
    }
  }
  return norm;
}

// Mean cross-entropy over a batch; accumulates gradients into the model's
// parameters (callers zero them first). Returns the batch loss.
inline double accumulate_batch(const TextClassifier& model, const std::vector<const ModelInput*>& inputs,
                               const std::vector<int>& labels, Rng* dropout_rng) {
  const double w = 1.0 / static_cast<double>(inputs.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tape t;
    const Var l = ag::cross_entropy(t, model.logits(t, *inputs[i], dropout_rng), labels[i], w);
    loss += t.value(l).data[0];
    t.backward(l);
  }
  return loss;
}

// Shuffle order for one epoch; a pure function of (seed, epoch).
inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  auto rng = make_rng({seed, 0x73687566ULL, epoch});
  return permutation(n, rng);
}

// Seeded carve of a labelled split into (train, validation); both keep file order.
inline std::pair<Split, Split> carve_validation(const Split& split, double fraction, std::uint64_t seed) {
  const std::size_t n = split.records.size();
  auto n_valid = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  n_valid = std::min(n_valid, n);
  auto rng = make_rng({seed, 0x76616c6964ULL});
  const auto perm = permutation(n, rng);
  std::vector<bool> is_valid(n, false);
  for (std::size_t i = 0; i < n_valid; ++i) is_valid[perm[i]] = true;
  Split tr{split.name, {}};
  Split va{split.name, {}};
  for (std::size_t i = 0; i < n; ++i) (is_valid[i] ? va : tr).records.push_back(split.records[i]);
  return {std::move(tr), std::move(va)};
}

struct RunRecord {
  ExperimentConfig config;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_valid_auc;
  std::vector<double> epoch_seconds;
  std::string checkpoint;
  bool ok = true;
  std::string error;

  // Validation AUC after the last epoch; NaN for failed runs.
  double final_auc() const {
    return ok && !epoch_valid_auc.empty() ? epoch_valid_auc.back() : std::numeric_limits<double>::quiet_NaN();
  }
};

struct TrainResult {
  RunRecord record;
  TrainedModel model;
};

// Per-record positive probabilities, order-aligned with the split. MISSING
// messages score as empty text so cardinality is preserved.
inline PredictionSet predict(const TrainedModel& tm, const Split& split) {
  PredictionSet ps;
  ps.items.reserve(split.records.size());
  for (const auto& item : text_view(split, MissingPolicy::empty_string)) {
    ps.items.push_back({item.id, tm.probability(item.text), item.label});
  }
  return ps;
}

struct TrainOptions {
  // Called after every epoch with (epoch index, loss, valid auc).
  std::function<void(std::size_t, double, double)> on_epoch;
};

inline TrainResult train(const ExperimentConfig& cfg, const Split& train_split, const Split& valid_split,
                         const Resources& res, const TrainOptions& opts = {}) {
  cfg.validate();
  const auto train_items = text_view(train_split, MissingPolicy::drop);
  if (train_items.empty()) throw ValidationError("training split has no usable records");
  std::vector<std::string> texts;
  std::vector<int> labels;
  for (const auto& it : train_items) {
    if (!it.label) throw ValidationError("training record '" + it.id + "' has no label");
    texts.push_back(it.text);
    labels.push_back(*it.label);
  }
  for (const auto& r : valid_split.records) {
    if (!r.label) throw ValidationError("validation record '" + r.id + "' has no label");
  }

  TrainResult result{{cfg, {}, {}, {}, {}, true, {}}, build_model(cfg, texts, res)};
  auto& tm = result.model;
  auto& params = tm.model->parameters();

  std::vector<ModelInput> inputs;
  inputs.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) inputs.push_back(tm.featurizer.prepare(texts[i], train_items[i].id));

  Adam adam(params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
  auto dropout_rng = make_rng({cfg.seed, 0x64726f70ULL});

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto order = epoch_order(inputs.size(), cfg.seed, epoch);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size, ++batch_index) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      std::vector<const ModelInput*> batch;
      std::vector<int> batch_labels;
      for (std::size_t k = b; k < e; ++k) {
        batch.push_back(&inputs[order[k]]);
        batch_labels.push_back(labels[order[k]]);
      }
      const auto where = [&] {
        return "run '" + cfg.name + "' (seed " + std::to_string(cfg.seed) + ", lr " + format_double(cfg.learning_rate) +
               ") at epoch " + std::to_string(epoch + 1) + ", batch " + std::to_string(batch_index);
      };
      params.zero_grad();
      double loss = 0.0;
      try {
        loss = accumulate_batch(*tm.model, batch, batch_labels, &dropout_rng);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " in " + where());
      }
      if (!std::isfinite(loss)) throw NumericError("non-finite loss in " + where());
      clip_global_norm(params, cfg.clip_norm);
      adam.step(params);
      loss_sum += loss * static_cast<double>(e - b);
    }
    const double epoch_loss = loss_sum / static_cast<double>(inputs.size());
    const double valid_auc = auc(predict(tm, valid_split)).auc;
    const std::chrono::duration<double> secs = std::chrono::steady_clock::now() - start;
    result.record.epoch_loss.push_back(epoch_loss);
    result.record.epoch_valid_auc.push_back(valid_auc);
    result.record.epoch_seconds.push_back(secs.count());
    if (opts.on_epoch) opts.on_epoch(epoch, epoch_loss, valid_auc);
  }
  return result;
}

// ---- persistence ----

inline constexpr std::string_view kCheckpointFile = "checkpoint.ckpt";

// Writes checkpoint.ckpt plus tokenizer files into dir; returns the
// checkpoint path.
inline std::string save_model(const TrainedModel& tm, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (const auto* tok = tm.featurizer.tokenizer()) save_tokenizer(*tok, dir);
  const auto path = dir / kCheckpointFile;
  text::write_file(path.string(), format_checkpoint(tm.config.to_key_values(), tm.model->parameters()));
  return path.string();
}

inline TrainedModel load_model(const std::string& checkpoint_path) {
  if (!std::filesystem::exists(checkpoint_path)) throw ConfigError("checkpoint not found: " + checkpoint_path);
  const auto ck = parse_checkpoint(text::read_file(checkpoint_path), checkpoint_path);
  TrainedModel tm{ExperimentConfig::from_key_values(ck.config, checkpoint_path), {}, nullptr};
  const auto dir = std::filesystem::path(checkpoint_path).parent_path();
  if (tm.config.model == ModelKind::encoder) {
    tm.featurizer = Featurizer::for_encoder(load_tokenizer(tm.config.tokenizer_spec(), dir));
  } else {
    if (!std::filesystem::exists(tm.config.vectors)) {
      throw ConfigError("vectors file named by checkpoint not found: " + tm.config.vectors);
    }
    tm.featurizer = Featurizer::for_baseline(std::make_shared<const EmbeddingTable>(load_vectors(tm.config.vectors)),
                                             tm.config.max_len);
  }
  tm.model = make_classifier(tm.config, tm.featurizer);
  load_parameters(ck, tm.model->parameters());
  return tm;
}

inline PredictionSet predict(const std::string& checkpoint_path, const Split& split) {
  return predict(load_model(checkpoint_path), split);
}

// run_record.txt: key=value summary. Wall-clock lives only in epochs.csv.
inline std::string format_run_record(const RunRecord& r) {
  std::string out;
  out += "status=" + std::string(r.ok ? "ok" : "failed") + "\n";
  if (!r.ok) out += "error=" + r.error + "\n";
  out += "epochs_completed=" + std::to_string(r.epoch_loss.size()) + "\n";
  out += "final_valid_auc=" + (r.ok ? text::fixed(r.final_auc(), 6) : std::string("nan")) + "\n";
  out += "checkpoint=" + std::filesystem::path(r.checkpoint).filename().string() + "\n";
  for (const auto& [k, v] : r.config.to_key_values()) out += "config." + k + "=" + v + "\n";
  return out;
}

// epoch,train_loss,valid_auc,seconds. Loss is written exactly (hex float).
inline std::string format_epoch_csv(const RunRecord& r) {
  std::string out = "epoch,train_loss,valid_auc,seconds\n";
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) {
    out += std::to_string(e + 1) + "," + text::hexfloat(r.epoch_loss[e]) + "," + text::fixed(r.epoch_valid_auc[e], 6) +
           "," + text::fixed(r.epoch_seconds[e], 3) + "\n";
  }
  return out;
}

inline std::vector<double> parse_epoch_losses(std::string_view csv_text, const std::string& origin) {
  std::vector<double> out;
  const auto rows = csv::parse(csv_text, origin);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() < 2) throw ParseError(origin + ": malformed epoch row");
    auto v = text::parse_double(rows[r][1]);
    if (!v) throw ParseError(origin + ": bad loss value");
    out.push_back(*v);
  }
  return out;
}

inline void save_run_record(const RunRecord& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  text::write_file((dir / "run_record.txt").string(), format_run_record(r));
  text::write_file((dir / "epochs.csv").string(), format_epoch_csv(r));
}

}  // namespace newsrel
