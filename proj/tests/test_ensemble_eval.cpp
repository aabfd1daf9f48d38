#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ensemble_fixture.hpp"
#include "newsrel/ensemble_eval.hpp"
#include "newsrel/random.hpp"
#include "oracles.hpp"

using namespace newsrel;

namespace {

PredictionSet make_set(const std::vector<std::string>& ids, const std::vector<double>& p) {
  PredictionSet s;
  for (std::size_t i = 0; i < ids.size(); ++i) s.items.push_back({ids[i], p[i], std::nullopt});
  return s;
}

struct Instance {
  std::vector<double> s;
  std::vector<int> y;
};

Instance random_instance(Rng& rng, bool tie_heavy) {
  Instance in;
  const std::size_t n = 2 + uniform_index(rng, 199);
  for (std::size_t i = 0; i < n; ++i) {
    in.y.push_back(static_cast<int>(uniform_index(rng, 2)));
    in.s.push_back(tie_heavy ? static_cast<double>(uniform_index(rng, 4)) / 4.0 : uniform01(rng));
  }
  in.y[0] = 1;
  in.y[1] = 0;
  return in;
}

}  // namespace

TEST(Auc, PerfectRanking) {
  EXPECT_EQ(auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{1, 1, 0, 0}).auc, 1.0);
}

TEST(Auc, AllTiedIsHalf) {
  const auto r = auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{1, 0, 1, 0});
  EXPECT_EQ(r.auc, 0.5);
  EXPECT_EQ(r.tie_pairs, 4u);
}

TEST(Auc, FiveRecordCase) {
  const std::vector<double> s = {0.7, 0.6, 0.4, 0.3, 0.5};
  const std::vector<int> y = {1, 0, 1, 0, 0};
  const auto r = auc(s, y);
  EXPECT_NEAR(r.auc, 4.0 / 6.0, 1e-12);
  EXPECT_EQ(r.auc, oracle::pairwise_auc(s, y));
  EXPECT_EQ(r.n_pos, 2u);
  EXPECT_EQ(r.n_neg, 3u);
}

TEST(Auc, SingleClassIsUndefined) {
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), UndefinedMetricError);
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 0}), UndefinedMetricError);
  EXPECT_THROW(auc(std::vector<double>{}, std::vector<int>{}), UndefinedMetricError);
}

TEST(Auc, NanIsNumericError) {
  EXPECT_THROW(auc(std::vector<double>{std::nan(""), 0.2}, std::vector<int>{1, 0}), NumericError);
}

TEST(Auc, MatchesPairwiseOracle) {
  auto rng = make_rng({31});
  for (int k = 0; k < 300; ++k) {
    const auto in = random_instance(rng, k % 2 == 0);
    EXPECT_EQ(auc(in.s, in.y).auc, oracle::pairwise_auc(in.s, in.y)) << "instance " << k;
  }
}

TEST(Auc, InvariantUnderCubing) {
  auto rng = make_rng({32});
  for (int k = 0; k < 100; ++k) {
    auto in = random_instance(rng, false);
    const double before = auc(in.s, in.y).auc;
    for (auto& x : in.s) x = x * x * x;
    EXPECT_NEAR(auc(in.s, in.y).auc, before, 1e-12);
  }
}

TEST(Auc, LabelFlipComplements) {
  auto rng = make_rng({33});
  for (int k = 0; k < 100; ++k) {
    auto in = random_instance(rng, k % 3 == 0);
    const double before = auc(in.s, in.y).auc;
    for (auto& y : in.y) y = 1 - y;
    EXPECT_NEAR(auc(in.s, in.y).auc, 1.0 - before, 1e-12);
  }
}

TEST(Ensemble, SingleSetIsIdentity) {
  const auto a = make_set({"x", "y"}, {0.1234567, 0.9});
  EXPECT_EQ(ensemble_average({a}).items, a.items);
}

TEST(Ensemble, IdenticalSetsAreFixedPoint) {
  auto rng = make_rng({34});
  PredictionSet a;
  for (int i = 0; i < 50; ++i) a.items.push_back({std::to_string(i), uniform01(rng), std::nullopt});
  EXPECT_EQ(ensemble_average({a, a, a}).items, a.items);
}

TEST(Ensemble, OrderOfInputsOnlyAffectsOrderOfIds) {
  const auto a = make_set({"x", "y", "z"}, {0.1, 0.7, 0.3});
  const auto b = make_set({"z", "x", "y"}, {0.5, 0.2, 0.6});
  const auto ab = ensemble_average({a, b});
  const auto ba = ensemble_average({b, a});
  std::map<std::string, double> m1, m2;
  for (const auto& it : ab.items) m1[it.id] = it.p;
  for (const auto& it : ba.items) m2[it.id] = it.p;
  EXPECT_EQ(m1, m2);
  EXPECT_EQ(ab.items[0].id, "x");
  EXPECT_EQ(ba.items[0].id, "z");
  EXPECT_NEAR(m1["y"], 0.65, 1e-15);
}

TEST(Ensemble, StaysWithinInputRange) {
  auto rng = make_rng({35});
  for (int k = 0; k < 50; ++k) {
    std::vector<PredictionSet> sets(2 + uniform_index(rng, 4));
    for (auto& s : sets) {
      for (int i = 0; i < 20; ++i) s.items.push_back({std::to_string(i), uniform01(rng), std::nullopt});
    }
    const auto avg = ensemble_average(sets);
    for (std::size_t i = 0; i < avg.size(); ++i) {
      double lo = 1.0, hi = 0.0;
      for (const auto& s : sets) {
        lo = std::min(lo, s.items[i].p);
        hi = std::max(hi, s.items[i].p);
      }
      EXPECT_GE(avg.items[i].p, lo);
      EXPECT_LE(avg.items[i].p, hi);
    }
  }
}

TEST(Ensemble, DegenerateWeightsReproduceFirstSet) {
  const auto a = make_set({"x", "y"}, {0.1, 0.7});
  const auto b = make_set({"x", "y"}, {0.9, 0.2});
  EXPECT_EQ(ensemble_average({a, b}, std::vector<double>{1.0, 0.0}).items, a.items);
  EXPECT_THROW(ensemble_average({a, b}, std::vector<double>{0.0, 0.0}), ConfigError);
  EXPECT_THROW(ensemble_average({a, b}, std::vector<double>{1.0}), ConfigError);
  EXPECT_THROW(ensemble_average({a, b}, std::vector<double>{-1.0, 2.0}), ConfigError);
  EXPECT_THROW(ensemble_average({}), ConfigError);
}

TEST(Ensemble, MismatchedIdsListSymmetricDifference) {
  const auto a = make_set({"x", "y", "z"}, {0.1, 0.2, 0.3});
  const auto b = make_set({"x", "y", "w"}, {0.1, 0.2, 0.3});
  try {
    ensemble_average({a, b});
    FAIL() << "expected AlignmentError";
  } catch (const AlignmentError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("w"), std::string::npos);
    EXPECT_NE(msg.find("z"), std::string::npos);
  }
}

TEST(Ensemble, ComplementaryErrorsAverageBetter) {
  const auto pair = fixtures::complementary_predictions(200, 7);
  auto scores = [](const PredictionSet& s) {
    std::vector<double> p;
    std::vector<int> y;
    for (const auto& it : s.items) {
      p.push_back(it.p);
      y.push_back(*it.label);
    }
    return oracle::pairwise_auc(p, y);
  };
  const auto avg = ensemble_average({pair.a, pair.b});
  EXPECT_GT(scores(avg), scores(pair.a));
  EXPECT_GT(scores(avg), scores(pair.b));
  EXPECT_EQ(auc(avg).auc, scores(avg));
}

TEST(Submission, FormatsSixDecimals) {
  const auto s = make_set({"1", "a,b"}, {0.5, 1.0 / 3.0});
  EXPECT_EQ(format_submission(s), "id,prob\n1,0.500000\n\"a,b\",0.333333\n");
}

TEST(Submission, RoundTripWithinRounding) {
  auto rng = make_rng({36});
  PredictionSet s;
  for (int i = 0; i < 100; ++i) s.items.push_back({"id" + std::to_string(i), uniform01(rng), std::nullopt});
  const auto back = parse_submission(format_submission(s), "rt");
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(back.items[i].id, s.items[i].id);
    EXPECT_NEAR(back.items[i].p, s.items[i].p, 5e-7);
  }
}

TEST(Submission, RejectsMalformed) {
  EXPECT_THROW(parse_submission("id,score\n1,0.5\n", "x"), ParseError);
  EXPECT_THROW(parse_submission("id,prob\n1,abc\n", "x"), ParseError);
  EXPECT_THROW(parse_submission("id,prob\n1,1.5\n", "x"), ValidationError);
  EXPECT_THROW(parse_submission("id,prob\n1,0.5\n1,0.2\n", "x"), ValidationError);
}

TEST(Submission, LabelsByIdAndFromColumn) {
  const auto s = parse_submission("id,prob,label\na,0.9,1\nb,0.1,0\n", "x");
  EXPECT_EQ(auc(s).auc, 1.0);
  const auto bare = make_set({"a", "b"}, {0.2, 0.8});
  EXPECT_THROW(auc(bare), ValidationError);
  EXPECT_EQ(auc(attach_labels(bare, {{"a", 1}, {"b", 0}})).auc, 0.0);
  EXPECT_THROW(attach_labels(bare, {{"a", 1}}), AlignmentError);
}
