#include <gtest/gtest.h>

#include <cmath>

#include "model_fixtures.hpp"
#include "newsrel/models/classifier.hpp"

using namespace newsrel;

namespace {

EncoderConfig tiny_encoder(std::size_t vocab = 30) {
  EncoderConfig c;
  c.num_layers = 4;
  c.hidden_size = 32;
  c.num_heads = 4;
  c.ffn_size = 64;
  c.max_positions = 64;
  c.vocab_size = vocab;
  return c;
}

BaselineConfig baseline(BaselineKind kind, std::size_t dim = 6) {
  BaselineConfig c;
  c.kind = kind;
  c.embedding_dim = dim;
  c.windows = {2, 3};
  c.maps_per_window = 5;
  c.lstm_hidden = 7;
  c.dropout = 0.5;
  return c;
}

std::array<double, 2> logits_of(const TextClassifier& m, const ModelInput& in) {
  return m.predict(in).logits;
}

}  // namespace

TEST(Encoder, HiddenStateShape) {
  ParameterSet ps;
  Encoder enc(tiny_encoder(), ps);
  auto rng = make_rng({1});
  enc.initialize(rng);
  const auto out = encoder_forward(fixtures::random_example(30, 64, 20, rng), enc);
  ASSERT_EQ(out.hidden_states.size(), 5u);
  for (const auto& h : out.hidden_states) {
    EXPECT_EQ(h.rows, 64u);
    EXPECT_EQ(h.cols, 32u);
    EXPECT_TRUE(h.all_finite());
  }
}

TEST(Encoder, PadRegionIdsDoNotAffectRealPositions) {
  ParameterSet ps;
  Encoder enc(tiny_encoder(), ps);
  auto rng = make_rng({2});
  enc.initialize(rng);
  fixtures::randomize(ps, rng, 0.3);
  auto a = fixtures::random_example(30, 64, 10, rng);
  auto b = a;
  for (std::size_t i = a.length(); i < 64; ++i) b.token_ids[i] = 4 + static_cast<int>(uniform_index(rng, 26));
  const auto oa = enc.run(a);
  const auto ob = enc.run(b);
  for (std::size_t l = 0; l < oa.hidden_states.size(); ++l) {
    for (std::size_t r = 0; r < a.length(); ++r) {
      for (std::size_t c = 0; c < 32; ++c) EXPECT_EQ(oa.hidden_states[l](r, c), ob.hidden_states[l](r, c));
    }
  }
}

TEST(Encoder, BitwiseDeterministic) {
  ParameterSet ps;
  Encoder enc(tiny_encoder(), ps);
  auto rng = make_rng({3});
  enc.initialize(rng);
  const auto ex = fixtures::random_example(30, 64, 30, rng);
  const auto a = enc.run(ex);
  const auto b = enc.run(ex);
  for (std::size_t l = 0; l < a.hidden_states.size(); ++l) EXPECT_EQ(a.hidden_states[l], b.hidden_states[l]);
}

TEST(Encoder, RejectsOutOfRangeIds) {
  ParameterSet ps;
  Encoder enc(tiny_encoder(), ps);
  auto rng = make_rng({4});
  auto ex = fixtures::random_example(30, 64, 5, rng);
  ex.token_ids[2] = 30;
  EXPECT_THROW(enc.run(ex), ConfigError);
}

TEST(Encoder, ConfigValidation) {
  auto c = tiny_encoder();
  c.num_heads = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  const auto base = EncoderConfig::base(100);
  EXPECT_EQ(base.num_layers, 12u);
  EXPECT_EQ(base.hidden_size, 768u);
  EXPECT_EQ(base.num_heads, 12u);
}

TEST(Classifier, TrimmedPassMatchesFullLength) {
  EncoderClassifier model(tiny_encoder(), 0.1);
  auto rng = make_rng({5});
  model.initialize(rng);
  fixtures::randomize(model.parameters(), rng, 0.2);
  ModelInput in;
  in.tokens = fixtures::random_example(30, 64, 17, rng);
  // Rebuild the head logits from the full-length encoder pass.
  ParameterSet& ps = model.parameters();
  const auto full = model.encoder().run(in.tokens);
  const auto via_full = head_forward(model.head(), cls_concat(full));
  const auto trimmed = model.predict(in);
  EXPECT_EQ(via_full.logits, trimmed.logits);
  EXPECT_GT(ps.scalar_count(), 0u);
}

TEST(ClsConcat, FirstBlockIsLayerOneCls) {
  ParameterSet ps;
  Encoder enc(tiny_encoder(), ps);
  auto rng = make_rng({6});
  enc.initialize(rng);
  const auto out = enc.run(fixtures::random_example(30, 64, 8, rng));
  const auto v = cls_concat(out);
  ASSERT_EQ(v.size(), 128u);
  for (std::size_t c = 0; c < 32; ++c) {
    EXPECT_EQ(v[c], out.hidden_states[1](0, c));
    EXPECT_EQ(v[96 + c], out.hidden_states[4](0, c));
  }
}

TEST(ClsConcat, BaseScaleWidth) {
  EncoderOutput out;
  for (int l = 0; l <= 12; ++l) out.hidden_states.emplace_back(3, 768);
  EXPECT_EQ(cls_concat(out).size(), 3072u);
  ParameterSet ps;
  EXPECT_EQ(ClsConcatHead(768, 0.1, ps).input_width(), 3072u);
}

TEST(ClsConcat, TooFewLayers) {
  EncoderOutput out;
  for (int l = 0; l < 4; ++l) out.hidden_states.emplace_back(2, 8);
  EXPECT_THROW(cls_concat(out), ConfigError);
  auto c = tiny_encoder();
  c.num_layers = 3;
  EXPECT_NO_THROW(c.validate());
}

TEST(ClsConcat, DependsOnlyOnTopFourClsVectors) {
  ParameterSet ps;
  Encoder enc(tiny_encoder(), ps);
  auto rng = make_rng({7});
  enc.initialize(rng);
  const auto a = enc.run(fixtures::random_example(30, 64, 12, rng));
  auto b = enc.run(fixtures::random_example(30, 64, 25, rng));
  // Copy a's top-four CLS rows into b; everything else in b stays different.
  for (std::size_t l = 1; l <= 4; ++l) {
    for (std::size_t c = 0; c < 32; ++c) b.hidden_states[l](0, c) = a.hidden_states[l](0, c);
  }
  EXPECT_NE(a.hidden_states[0], b.hidden_states[0]);
  EXPECT_EQ(cls_concat(a), cls_concat(b));
  b.hidden_states[3](0, 5) += 1.0;
  EXPECT_NE(cls_concat(a), cls_concat(b));
}

TEST(Head, ZeroWeightsGiveUniform) {
  ParameterSet ps;
  ClsConcatHead head(32, 0.1, ps);
  const auto p = head_forward(head, std::vector<double>(128, 0.0));
  EXPECT_EQ(p.probs[0], 0.5);
  EXPECT_EQ(p.probs[1], 0.5);
}

TEST(Head, ClosedFormSoftmax) {
  const auto p = softmax2(2.0, 0.0);
  EXPECT_NEAR(p.positive(), 1.0 / (1.0 + std::exp(2.0)), 1e-15);
  EXPECT_NEAR(p.positive(), 0.1192, 1e-4);
}

TEST(Head, ProbabilitiesNormalised) {
  ParameterSet ps;
  ClsConcatHead head(8, 0.0, ps);
  auto rng = make_rng({8});
  head.initialize(rng);
  for (int k = 0; k < 50; ++k) {
    const auto f = fixtures::random_matrix(1, 32, rng, 5.0);
    const auto p = head_forward(head, f.data);
    EXPECT_NEAR(p.probs[0] + p.probs[1], 1.0, 1e-9);
    EXPECT_GT(p.probs[1], 0.0);
    EXPECT_LT(p.probs[1], 1.0);
  }
}

TEST(Head, NonFiniteFeaturesRejected) {
  ParameterSet ps;
  ClsConcatHead head(8, 0.0, ps);
  std::vector<double> f(32, 0.0);
  f[3] = std::nan("");
  EXPECT_THROW(head_forward(head, f), NumericError);
  EXPECT_THROW(head_forward(head, std::vector<double>(31, 0.0)), ConfigError);
}

TEST(TextCnn, ZeroInputZeroBiasGivesZeroLogits) {
  TextCnnClassifier m(baseline(BaselineKind::text_cnn));
  auto rng = make_rng({9});
  m.initialize(rng);
  ModelInput in;
  in.embedded = Matrix(10, 6);
  in.mask.assign(10, 0);
  EXPECT_EQ(logits_of(m, in), (std::array<double, 2>{0.0, 0.0}));
}

TEST(TextCnn, SingleWindowHandComputed) {
  BaselineConfig c;
  c.kind = BaselineKind::text_cnn;
  c.embedding_dim = 3;
  c.windows = {1};
  c.maps_per_window = 1;
  c.dropout = 0.0;
  TextCnnClassifier m(c);
  auto& ps = m.parameters();
  ps.at("cnn.conv1.weight").value.data = {2.0, -1.0, 0.5};
  ps.at("cnn.conv1.bias").value.data = {0.25};
  ps.at("cnn.out.weight").value.data = {0.0, 1.0};
  ps.at("cnn.out.bias").value.data = {0.0, 0.0};
  ModelInput in;
  in.embedded = Matrix(4, 3);
  in.embedded(2, 2) = 1.0;  // one-hot row 2, component 2
  in.mask = {1, 1, 1, 0};
  // Row responses: 0.25, 0.25, 0.5 + 0.25, 0.25; max = 0.75.
  EXPECT_EQ(logits_of(m, in), (std::array<double, 2>{0.0, 0.75}));
}

TEST(TextCnn, ShortSequencesArePadded) {
  TextCnnClassifier m(baseline(BaselineKind::text_cnn));
  auto rng = make_rng({10});
  m.initialize(rng);
  auto in = fixtures::baseline_input(1, 6, 1, rng);
  const auto l = logits_of(m, in);
  EXPECT_TRUE(std::isfinite(l[0]) && std::isfinite(l[1]));
}

TEST(TextCnn, PermutingZeroTailRowsIsInvariant) {
  TextCnnClassifier m(baseline(BaselineKind::text_cnn));
  auto rng = make_rng({11});
  m.initialize(rng);
  auto in = fixtures::baseline_input(12, 6, 7, rng);
  const auto before = logits_of(m, in);
  std::swap_ranges(in.embedded.row(8).begin(), in.embedded.row(8).end(), in.embedded.row(11).begin());
  EXPECT_EQ(logits_of(m, in), before);
}

TEST(BiLstm, ZeroParametersGiveZeroLogits) {
  BiLstmClassifier m(baseline(BaselineKind::bilstm));
  auto rng = make_rng({12});
  auto in = fixtures::baseline_input(9, 6, 5, rng);
  EXPECT_EQ(logits_of(m, in), (std::array<double, 2>{0.0, 0.0}));
}

TEST(BiLstm, IndependentOfPadRegion) {
  BiLstmClassifier m(baseline(BaselineKind::bilstm));
  auto rng = make_rng({13});
  m.initialize(rng);
  auto in = fixtures::baseline_input(9, 6, 5, rng);
  const auto before = logits_of(m, in);
  for (std::size_t r = 5; r < 9; ++r) {
    for (auto& v : in.embedded.row(r)) v = standard_normal(rng);
  }
  EXPECT_EQ(logits_of(m, in), before);
}

TEST(BiLstm, LengthOneUsesSameStepBothWays) {
  BaselineConfig c = baseline(BaselineKind::bilstm);
  c.dropout = 0.0;
  BiLstmClassifier m(c);
  auto rng = make_rng({14});
  m.initialize(rng);
  auto& ps = m.parameters();
  // Make the backward direction a copy of the forward one.
  for (auto& p : ps.all()) {
    const auto pos = p.name.find(".backward.");
    if (pos == std::string::npos) continue;
    auto fwd = p.name;
    fwd.replace(pos, 10, ".forward.");
    p.value = ps.at(fwd).value;
  }
  // Output weights: logit 1 = sum(forward state) - sum(backward state) = 0.
  auto& w = ps.at("bilstm.out.weight").value;
  for (std::size_t r = 0; r < w.rows; ++r) {
    w(r, 0) = 0.0;
    w(r, 1) = r < 7 ? 1.0 : -1.0;
  }
  auto in = fixtures::baseline_input(4, 6, 1, rng);
  EXPECT_NEAR(logits_of(m, in)[1] - ps.at("bilstm.out.bias").value.data[1], 0.0, 1e-15);
}

TEST(BiLstm, EmptyMaskUsesZeroState) {
  BiLstmClassifier m(baseline(BaselineKind::bilstm));
  auto rng = make_rng({15});
  m.initialize(rng);
  auto in = fixtures::baseline_input(5, 6, 0, rng);
  EXPECT_EQ(logits_of(m, in), (std::array<double, 2>{0.0, 0.0}));
}

TEST(Baselines, ConfigValidation) {
  auto c = baseline(BaselineKind::text_cnn);
  c.windows = {};
  EXPECT_THROW(c.validate(), ConfigError);
  c.windows = {0};
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(parse_model_kind("svm"), ConfigError);
}
