#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "docrel/errors.hpp"
#include "docrel/metrics.hpp"
#include "fixtures.hpp"

using namespace docrel;

namespace {

const Document& doc() {
  static const Document d = docrel::testing::small_document();
  return d;
}

}  // namespace

TEST(Metrics, ZeroOverZeroIsZero) {
  const PrecisionRecall pr = precision_recall(0, 0, 0);
  EXPECT_EQ(pr.precision, 0.0);
  EXPECT_EQ(pr.recall, 0.0);
  EXPECT_EQ(pr.f1, 0.0);
}

TEST(Metrics, PerfectPrediction) {
  const auto gold = gold_triples(std::span(&doc(), 1));
  EXPECT_EQ(re_f1(gold, gold).f1, 1.0);
  const auto ev = gold_evidence(std::span(&doc(), 1));
  EXPECT_EQ(ev.size(), 3u);
  EXPECT_EQ(evi_f1(ev, ev).f1, 1.0);
}

TEST(Metrics, ReHandFixture) {
  const std::vector<RelationTriple> gold{{"d", 0, 1, 0}, {"d", 1, 2, 1}};
  const std::vector<RelationTriple> pred{{"d", 0, 1, 0}, {"d", 2, 1, 1}, {"d", 0, 2, 0}};
  const PrecisionRecall pr = re_f1(pred, gold);
  EXPECT_DOUBLE_EQ(pr.precision, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(pr.recall, 0.5);
  EXPECT_DOUBLE_EQ(pr.f1, 0.4);
  EXPECT_EQ(pr.true_positives, 1);
  EXPECT_EQ(pr.false_positives, 2);
  EXPECT_EQ(pr.false_negatives, 1);
}

TEST(Metrics, DuplicatePredictionsRejected) {
  const std::vector<RelationTriple> pred{{"d", 0, 1, 0}, {"d", 0, 1, 0}};
  EXPECT_THROW(re_f1(pred, {}), ValidationError);
}

TEST(Metrics, EvidenceHandFixture) {
  const std::vector<EvidenceTuple> gold{{"d", 0, 1, 0, 0}, {"d", 0, 1, 0, 3}, {"d", 0, 1, 0, 4}};
  const std::vector<EvidenceTuple> pred{{"d", 0, 1, 0, 0}, {"d", 0, 1, 0, 3}};
  const PrecisionRecall pr = evi_f1(pred, gold);
  EXPECT_DOUBLE_EQ(pr.precision, 1.0);
  EXPECT_DOUBLE_EQ(pr.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(pr.f1, 0.8);
}

TEST(Metrics, EvidenceOnWrongTripleIsNotCredited) {
  const std::vector<EvidenceTuple> gold{{"d", 0, 1, 0, 0}};
  const std::vector<EvidenceTuple> pred{{"d", 0, 1, 1, 0}};
  EXPECT_EQ(evi_f1(pred, gold).true_positives, 0);
}

TEST(Metrics, IgnWithEmptyIndexEqualsRe) {
  const auto gold = gold_triples(std::span(&doc(), 1));
  std::vector<RelationTriple> pred = gold;
  pred.push_back({"small", 1, 2, 0});
  const PrecisionRecall a = re_f1(pred, gold);
  const PrecisionRecall b = ign_re_f1(pred, gold, std::span(&doc(), 1), TrainFactIndex{});
  EXPECT_EQ(a.precision, b.precision);
  EXPECT_EQ(a.recall, b.recall);
  EXPECT_EQ(a.f1, b.f1);
}

TEST(Metrics, IgnRemovesTrainFactsFromBothSides) {
  // small: gold (0,1,r0) and (2,0,r1). The train split holds the (0,1,r0) fact.
  const Document train = docrel::testing::make_document(
      "train", {"alpha beta met gamma"}, {{{0, 0, 2}}, {{0, 3, 4}}}, {{0, 1, 0, {0}}});
  const TrainFactIndex index = build_train_fact_index({train});
  ASSERT_EQ(index.size(), 1u);
  const auto gold = gold_triples(std::span(&doc(), 1));

  // only correct prediction is the train fact: vanishes, leaving 0 tp
  const std::vector<RelationTriple> p1{{"small", 0, 1, 0}, {"small", 1, 2, 0}};
  const PrecisionRecall a = ign_re_f1(p1, gold, std::span(&doc(), 1), index);
  EXPECT_EQ(a.true_positives, 0);
  EXPECT_EQ(a.false_positives, 1);
  EXPECT_EQ(a.false_negatives, 1);
  EXPECT_EQ(a.f1, 0.0);

  // pred {A, X, B}, gold {A, B}; A filtered -> pred {X, B}, gold {B}
  const std::vector<RelationTriple> p2{{"small", 0, 1, 0}, {"small", 1, 2, 0}, {"small", 2, 0, 1}};
  const PrecisionRecall b = ign_re_f1(p2, gold, std::span(&doc(), 1), index);
  EXPECT_DOUBLE_EQ(b.precision, 0.5);
  EXPECT_DOUBLE_EQ(b.recall, 1.0);
  EXPECT_DOUBLE_EQ(b.f1, 2.0 / 3.0);
}

TEST(Metrics, PermutationInvariantAndMonotone) {
  std::vector<RelationTriple> gold, pred;
  for (int i = 0; i < 6; ++i) gold.push_back({"d", i, i + 1, i % 2});
  for (int i = 0; i < 4; ++i) pred.push_back({"d", i, i + 1, i % 2});
  pred.push_back({"d", 9, 8, 0});
  const PrecisionRecall base = re_f1(pred, gold);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(pred.begin(), pred.end(), rng);
    const PrecisionRecall again = re_f1(pred, gold);
    EXPECT_EQ(again.f1, base.f1);
  }
  auto more = pred;
  more.push_back({"d", 4, 5, 0});
  EXPECT_GE(re_f1(more, gold).recall, base.recall);
  auto worse = pred;
  worse.push_back({"d", 7, 3, 1});
  EXPECT_LE(re_f1(worse, gold).precision, base.precision);
}

TEST(Metrics, ReportJsonHasAllSections) {
  EvalReport r;
  r.re = precision_recall(1, 3, 2);
  const std::string j = report_json(r);
  for (const char* key : {"\"re\"", "\"ign_re\"", "\"evidence\"", "\"f1\"", "\"tp\""}) {
    EXPECT_NE(j.find(key), std::string::npos) << key;
  }
}
