#include <gtest/gtest.h>

#include <filesystem>

#include "model_fixtures.hpp"
#include "newsrel/newsrel.hpp"

using namespace newsrel;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.name = "tiny";
  c.tokenizer = TokenizerStrategy::whitespace;
  c.vocab_size = 400;
  c.max_len = 16;
  c.epochs = 2;
  c.batch_size = 8;
  c.learning_rate = 1e-3;
  c.num_layers = 4;
  c.hidden_size = 8;
  c.num_heads = 2;
  c.ffn_size = 16;
  return c;
}

Resources tiny_resources() {
  Resources r;
  r.segmenter = WordSegmenter(synthetic::compound_words());
  r.vectors = std::make_shared<const EmbeddingTable>(synthetic::pretrained_vectors(8, 7, 3.0));
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("newsrel_training_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<Matrix> snapshot(const ParameterSet& ps) {
  std::vector<Matrix> out;
  for (const auto& p : ps.all()) out.push_back(p.value);
  return out;
}

}  // namespace

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  auto cfg = tiny_config();
  cfg.learning_rate = 0.0;
  const auto data = synthetic::generate_synthetic_corpus(60, 1.0, 1);
  const auto [tr, va] = carve_validation(data, 0.2, cfg.seed);
  const auto res = tiny_resources();
  std::vector<std::string> texts;
  for (const auto& it : text_view(tr, MissingPolicy::drop)) texts.push_back(it.text);
  const auto fresh = build_model(cfg, texts, res);
  const auto trained = train(cfg, tr, va, res);
  EXPECT_EQ(snapshot(trained.model.model->parameters()), snapshot(fresh.model->parameters()));
  EXPECT_EQ(trained.record.final_auc(), auc(predict(fresh, va)).auc);
}

TEST(Train, DeterministicForEveryModelKind) {
  const auto data = synthetic::generate_synthetic_corpus(60, 1.0, 2);
  const auto [tr, va] = carve_validation(data, 0.2, 42);
  for (auto kind : {ModelKind::encoder, ModelKind::text_cnn, ModelKind::bilstm}) {
    auto cfg = tiny_config();
    cfg.model = kind;
    cfg.cnn_maps = 4;
    cfg.lstm_hidden = 4;
    const auto a = train(cfg, tr, va, tiny_resources());
    const auto b = train(cfg, tr, va, tiny_resources());
    ASSERT_EQ(a.record.epoch_loss.size(), 2u);
    for (std::size_t e = 0; e < 2; ++e) EXPECT_NEAR(a.record.epoch_loss[e], b.record.epoch_loss[e], 1e-12);
    EXPECT_EQ(snapshot(a.model.model->parameters()), snapshot(b.model.model->parameters())) << to_string(kind);
  }
}

TEST(Train, DuplicatedBatchLossEqualsSingleExample) {
  EncoderClassifier model({4, 8, 2, 16, 16, 20, 0.0}, 0.0);
  auto rng = make_rng({3});
  model.initialize(rng);
  ModelInput in;
  in.tokens = fixtures::random_example(20, 16, 6, rng);
  const double single = accumulate_batch(model, {&in}, {1}, nullptr);
  model.parameters().zero_grad();
  const double batch = accumulate_batch(model, {&in, &in, &in, &in}, {1, 1, 1, 1}, nullptr);
  EXPECT_NEAR(batch, single, 1e-14);
  EXPECT_NEAR(batch, fixtures::eval_loss(model, in, 1), 1e-14);
}

TEST(Train, ShuffleOrderIsPureFunctionOfSeedAndEpoch) {
  EXPECT_EQ(epoch_order(100, 42, 3), epoch_order(100, 42, 3));
  EXPECT_NE(epoch_order(100, 42, 3), epoch_order(100, 42, 4));
  EXPECT_NE(epoch_order(100, 42, 3), epoch_order(100, 24, 3));
  auto p = epoch_order(100, 42, 0);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], i);
}

TEST(Train, CarveValidationPartitions) {
  const auto data = synthetic::generate_synthetic_corpus(95, 0.5, 4);
  const auto [tr, va] = carve_validation(data, 0.1, 42);
  EXPECT_EQ(va.records.size(), 10u);
  EXPECT_EQ(tr.records.size() + va.records.size(), 95u);
  std::set<std::string> ids;
  for (const auto& r : tr.records) ids.insert(r.id);
  for (const auto& r : va.records) EXPECT_EQ(ids.count(r.id), 0u);
}

TEST(Train, RejectsUnlabelledOrEmptyData) {
  auto cfg = tiny_config();
  auto data = synthetic::generate_synthetic_corpus(20, 1.0, 5);
  const auto res = tiny_resources();
  EXPECT_THROW(train(cfg, Split{}, data, res), ValidationError);
  auto unlabelled = data;
  unlabelled.records[3].label.reset();
  EXPECT_THROW(train(cfg, unlabelled, data, res), ValidationError);
  cfg.epochs = 0;
  EXPECT_THROW(train(cfg, data, data, res), ConfigError);
}

TEST(Train, NonFiniteLossNamesRunAndBatch) {
  auto cfg = tiny_config();
  cfg.learning_rate = 1e300;
  cfg.clip_norm = 0.0;
  cfg.adam_epsilon = 1e-300;
  const auto data = synthetic::generate_synthetic_corpus(40, 1.0, 6);
  try {
    train(cfg, data, data, tiny_resources());
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("tiny"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
  }
}

TEST(Train, ClipGlobalNorm) {
  ParameterSet ps;
  auto& p = ps.add("w", 1, 2);
  p.grad.data = {3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_global_norm(ps, 1.0), 5.0);
  EXPECT_NEAR(p.grad.data[0], 0.6, 1e-15);
  EXPECT_NEAR(p.grad.data[1], 0.8, 1e-15);
}

TEST(Predict, EdgeCases) {
  const auto data = synthetic::generate_synthetic_corpus(40, 1.0, 7);
  const auto trained = train(tiny_config(), data, data, tiny_resources());
  EXPECT_TRUE(predict(trained.model, Split{}).empty());

  Split holes = data;
  holes.records[0].message.reset();
  holes.records[1].message = holes.records[2].message;
  const auto preds = predict(trained.model, holes);
  ASSERT_EQ(preds.size(), holes.records.size());
  EXPECT_EQ(preds.items[1].p, preds.items[2].p);
  for (std::size_t i = 0; i < preds.size(); ++i) EXPECT_EQ(preds.items[i].id, holes.records[i].id);
  EXPECT_NO_THROW(preds.validate());
}

TEST(Checkpoint, RoundTripReproducesPredictions) {
  const auto dir = scratch("ckpt");
  const auto data = synthetic::generate_synthetic_corpus(40, 1.0, 8);
  for (auto kind : {ModelKind::encoder, ModelKind::text_cnn, ModelKind::bilstm}) {
    auto cfg = tiny_config();
    cfg.model = kind;
    cfg.cnn_maps = 4;
    cfg.lstm_hidden = 4;
    cfg.tokenizer = TokenizerStrategy::word_segment_then_subword;
    cfg.vocab_size = 200;
    const auto vec_path = dir / "vectors.txt";
    text::write_file(vec_path.string(), format_vectors(*tiny_resources().vectors));
    cfg.vectors = vec_path.string();
    const auto lex_path = dir / "lexicon.txt";
    text::write_file(lex_path.string(), text::join(synthetic::compound_words(), "\n") + "\n");
    cfg.segment_lexicon = lex_path.string();
    const auto trained = train(cfg, data, data, Resources::from_config(cfg));
    const auto model_dir = dir / std::string(to_string(kind));
    const auto path = save_model(trained.model, model_dir);
    const auto first = text::read_file(path);
    save_model(trained.model, model_dir);
    EXPECT_EQ(text::read_file(path), first);
    const auto loaded = load_model(path);
    EXPECT_EQ(snapshot(loaded.model->parameters()), snapshot(trained.model.model->parameters()));
    EXPECT_EQ(predict(path, data).items, predict(trained.model, data).items);
  }
  fs::remove(dir / "encoder" / std::string(kVocabFile));
  EXPECT_THROW(load_model((dir / "encoder" / std::string(kCheckpointFile)).string()), ConfigError);
  EXPECT_THROW(load_model((dir / "absent.ckpt").string()), ConfigError);
  fs::remove_all(dir);
}

TEST(Checkpoint, MalformedContainerIsParseError) {
  EXPECT_THROW(parse_checkpoint("not a checkpoint\n", "x"), ParseError);
  EXPECT_THROW(parse_checkpoint("newsrel-checkpoint 1\nconfig 0\nparameters 1\ntensor w 1 2\n0x1p+0\nend\n", "x"),
               ParseError);
}

TEST(RunRecord, FilesHaveNoTimestampsAndExactLosses) {
  const auto data = synthetic::generate_synthetic_corpus(40, 1.0, 9);
  const auto trained = train(tiny_config(), data, data, tiny_resources());
  const auto dir = scratch("record");
  save_run_record(trained.record, dir);
  const auto losses = parse_epoch_losses(text::read_file((dir / "epochs.csv").string()), "epochs.csv");
  EXPECT_EQ(losses, trained.record.epoch_loss);
  const auto rec = text::read_file((dir / "run_record.txt").string());
  EXPECT_NE(rec.find("status=ok"), std::string::npos);
  EXPECT_NE(rec.find("config.seed=42"), std::string::npos);
  EXPECT_EQ(rec.find("seconds"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Config, ParsesAndRejects) {
  const auto c = ExperimentConfig::from_key_values(
      text::parse_key_values("# comment\nmodel = text_cnn\nlearning_rate=2e-5\nseed=38\ncnn_windows=2,3\n", "c"), "c");
  EXPECT_EQ(c.model, ModelKind::text_cnn);
  EXPECT_EQ(c.learning_rate, 2e-5);
  EXPECT_EQ(c.seed, 38u);
  EXPECT_EQ(c.cnn_windows, (std::vector<std::size_t>{2, 3}));
  EXPECT_THROW(ExperimentConfig::from_key_values({{"bogus", "1"}}, "c"), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_key_values({{"epochs", "x"}}, "c"), ConfigError);
  ExperimentConfig bad;
  bad.num_layers = 3;
  EXPECT_THROW(bad.validate(), ConfigError);
  const auto back = ExperimentConfig::from_key_values(text::parse_key_values(c.to_text(), "rt"), "rt");
  EXPECT_EQ(back.to_text(), c.to_text());
}

TEST(Sweep, SeedsGiveDistinctRecordsAndTableEchoesConfigs) {
  const auto data = synthetic::generate_synthetic_corpus(80, 0.6, 10);
  const auto [tr, va] = carve_validation(data, 0.25, 1);
  auto a = tiny_config();
  a.seed = 24;
  auto b = tiny_config();
  b.seed = 42;
  SweepOptions opts;
  opts.resources = [](const ExperimentConfig&) { return tiny_resources(); };
  const auto result = sweep({a, b}, tr, va, opts);
  ASSERT_EQ(result.runs.size(), 2u);
  EXPECT_NE(result.runs[0].epoch_loss, result.runs[1].epoch_loss);
  EXPECT_NE(result.table.find("|      2 |   24 | 1.00e-3 |"), std::string::npos) << result.table;
}

TEST(Sweep, SingleConfigAndFailures) {
  const auto data = synthetic::generate_synthetic_corpus(40, 1.0, 11);
  SweepOptions opts;
  opts.resources = [](const ExperimentConfig&) { return tiny_resources(); };
  const auto one = sweep({tiny_config()}, data, data, opts);
  EXPECT_EQ(one.table, emit_results_table(one.runs));

  auto broken = tiny_config();
  broken.name = "broken";
  broken.model = ModelKind::text_cnn;
  const auto dir = scratch("sweep");
  const auto mixed = sweep({broken, tiny_config()}, data, data,
                           SweepOptions{dir, nullptr, [](const ExperimentConfig& c) {
                                          if (c.name == "broken") return Resources::from_config(c);
                                          return tiny_resources();
                                        }});
  ASSERT_EQ(mixed.runs.size(), 2u);
  EXPECT_FALSE(mixed.runs[0].ok);
  EXPECT_TRUE(mixed.runs[1].ok);
  EXPECT_NE(mixed.table.find("failed"), std::string::npos);
  EXPECT_LT(mixed.table.find("tiny"), mixed.table.find("broken"));
  EXPECT_TRUE(fs::exists(dir / "run_01" / std::string(kCheckpointFile)));
  EXPECT_TRUE(fs::exists(dir / "run_00" / "run_record.txt"));
  EXPECT_THROW(sweep({}, data, data), ConfigError);
  fs::remove_all(dir);
}

TEST(ResultsTable, Formatting) {
  EXPECT_EQ(format_learning_rate(2e-5), "2.00e-5");
  EXPECT_EQ(format_learning_rate(3e-4), "3.00e-4");
  const auto empty = emit_results_table({});
  EXPECT_EQ(std::count(empty.begin(), empty.end(), '\n'), 2);
  EXPECT_EQ(empty.substr(0, 5), "Model");
}
