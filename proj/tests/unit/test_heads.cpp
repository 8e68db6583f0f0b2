#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "docrel/errors.hpp"
#include "docrel/heads.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "pooling_fixture.hpp"

using namespace docrel;

namespace {

const double kSigma2 = 1.0 / (1.0 + std::exp(-2.0));  // 0.880797...

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

}  // namespace

TEST(Heads, SigmaTwoConstant) { EXPECT_NEAR(kSigma2, 0.880797, 1e-6); }

TEST(Heads, MeanPoolingReadouts) {
  Matrix emb(4, 2);
  emb << 1, 2, 3, 4, 5, 6, 7, 8;
  EXPECT_EQ(extract_head_embedding(emb, {1, 2}), emb.row(1));
  EXPECT_EQ(extract_head_embedding(emb, {1, 3}), RowVector((emb.row(1) + emb.row(2)) / 2.0));
  Matrix same = Matrix::Constant(4, 2, 0.25);
  EXPECT_EQ(extract_head_embedding(same, {0, 4}), same.row(0));
  const std::vector<TokenSpan> spans{{0, 1}, {1, 4}};
  const Matrix s = extract_sentence_embeddings(emb, spans);
  EXPECT_EQ(s.row(0), emb.row(0));
  EXPECT_EQ(s.row(1), RowVector((emb.row(1) + emb.row(2) + emb.row(3)) / 3.0));
}

TEST(Heads, TailEmbeddingAveragesAllMentionTokens) {
  const Document d = docrel::testing::small_document();
  const WordTokenizer tok = WordTokenizer::from_corpus({d});
  const auto seq = build_sequence(d, tok, 1, 64);
  Matrix emb = Matrix::Zero(seq.length(), 1);
  for (int i = 0; i < seq.length(); ++i) emb(i, 0) = i;
  const int pre = seq.prefix_length();
  // entity 0: positions pre, pre+1, pre+8, pre+9
  EXPECT_DOUBLE_EQ(extract_tail_embedding(emb, d, 0, seq)(0), pre + 4.5);
}

TEST(Heads, RelationScores) {
  RelationHeadParams p = RelationHeadParams::zeros(2, 2);
  const RowVector h = row({1, 0});
  Matrix t(1, 2);
  t << 0, 1;
  EXPECT_TRUE((relation_scores(h, t, p).array() == 0.5).all());
  p.weights[0] << 0, 2, 0, 0;
  EXPECT_NEAR(relation_scores(h, t, p)(0, 0), kSigma2, 1e-12);
  p.bias << 0.3, -1.2;
  const Matrix z = relation_scores(RowVector::Zero(2), Matrix::Random(3, 2), p);
  for (int k = 0; k < 3; ++k) {
    EXPECT_DOUBLE_EQ(z(k, 0), sigmoid(0.3));
    EXPECT_DOUBLE_EQ(z(k, 1), sigmoid(-1.2));
  }
}

TEST(Heads, RelationScoresMonotoneInBias) {
  RelationHeadParams p = RelationHeadParams::zeros(3, 2);
  p.weights[1] = Matrix::Random(3, 3);
  const RowVector h = RowVector::Random(3);
  const Matrix t = Matrix::Random(4, 3);
  const Matrix before = relation_scores(h, t, p);
  p.bias(0, 1) += 0.1;
  const Matrix after = relation_scores(h, t, p);
  EXPECT_TRUE((after.col(1).array() > before.col(1).array()).all());
  EXPECT_EQ(after.col(0), before.col(0));
}

TEST(Heads, NonFiniteInputIsRejected) {
  RelationHeadParams p = RelationHeadParams::zeros(2, 1);
  RowVector h = RowVector::Zero(2);
  h(0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(relation_scores(h, Matrix::Zero(1, 2), p), ValidationError);
}

TEST(Heads, FusedEvidence) {
  EvidenceBank bank = EvidenceBank::zeros(2, 1);
  Matrix s(1, 2);
  s << 1, 1;
  // all parameters zero -> 0.5
  EXPECT_DOUBLE_EQ(fused_evidence(s, row({2}), bank).probabilities(0), 0.5);
  bank.in_weight.setOnes();
  bank.out_weight << 0.5;
  const FusedEvidence f = fused_evidence(s, row({2}), bank);
  EXPECT_DOUBLE_EQ(f.fused(0, 0), 4.0);
  EXPECT_NEAR(f.probabilities(0), kSigma2, 1e-12);

  EvidenceBank b3 = EvidenceBank::zeros(3, 2);
  b3.in_weight = Matrix::Random(6, 2);
  b3.in_bias << 0.7, -0.2;
  const FusedEvidence zero_r = fused_evidence(Matrix::Random(4, 3), RowVector::Zero(2), b3);
  for (int j = 0; j < 4; ++j) EXPECT_EQ(zero_r.fused.row(j), RowVector(b3.in_bias));
}

TEST(Heads, FusedEvidenceMatchesTripleSum) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  const int d = 3, m = 2;
  EvidenceBank bank = EvidenceBank::zeros(d, m);
  bank.in_weight = Matrix::NullaryExpr(d * m, m, [&] { return n(rng); });
  bank.in_bias = Matrix::NullaryExpr(1, m, [&] { return n(rng); });
  const Matrix s = Matrix::NullaryExpr(2, d, [&] { return n(rng); });
  const RowVector r = RowVector::NullaryExpr(m, [&] { return n(rng); });
  const Matrix f = fused_evidence(s, r, bank).fused;
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < m; ++k) {
      double v = bank.in_bias(0, k);
      for (int a = 0; a < d; ++a) {
        for (int b = 0; b < m; ++b) v += s(j, a) * r(b) * bank.in_weight(a * m + b, k);
      }
      EXPECT_NEAR(f(j, k), v, 1e-12);
    }
  }
}

TEST(Heads, AttentionGuidedEvidence) {
  EvidenceBank bank = EvidenceBank::zeros(2, 1);
  Vector a(1);
  a << 0.25;
  Matrix f(1, 1);
  f << 4;
  bank.att_weight << 2;
  EXPECT_NEAR(attention_guided_evidence(a, f, bank)(0), kSigma2, 1e-12);

  bank.att_bias << -0.4;
  const Matrix many = Matrix::Random(3, 1);
  const Vector zeros = Vector::Zero(3);
  for (int j = 0; j < 3; ++j) {
    EXPECT_DOUBLE_EQ(attention_guided_evidence(zeros, many, bank)(j), sigmoid(-0.4));
  }
  bank.att_weight.setZero();
  const Vector feats = Vector::Random(3);
  for (int j = 0; j < 3; ++j) {
    EXPECT_DOUBLE_EQ(attention_guided_evidence(feats, many, bank)(j), sigmoid(-0.4));
  }
}

TEST(Pooling, UniformAttentionGivesOneOverL) {
  std::mt19937_64 rng(3);
  auto f = docrel::testing::random_pooling_fixture(rng);
  while (f.seq.windows.size() != 1) f = docrel::testing::random_pooling_fixture(rng);
  const double inv = 1.0 / f.seq.length();
  for (auto& layer : f.attention[0]) {
    for (auto& h : layer) h.setConstant(inv);
  }
  const Vector a = attention_sentence_features(f.seq, f.attention, f.head_rows, f.tail_rows,
                                               f.last_layers);
  for (Eigen::Index j = 0; j < a.size(); ++j) EXPECT_NEAR(a(j), inv, 1e-15);
}

TEST(Pooling, IdentityPoolsGiveHeadRow) {
  // l=1, one head, one-token head, one token per sentence.
  EntityGuidedSequence seq;
  seq.ids.assign(8, 0);  // [CLS] h [SEP] d0 d1 d2 d3 [SEP]
  seq.head_span = {1, 2};
  for (int i = 0; i < 4; ++i) {
    seq.doc_pos_map.push_back({3 + i, 4 + i});
    seq.sentence_spans.push_back({3 + i, 4 + i});
  }
  seq.windows = split_windows(seq, 16);
  Matrix att = Matrix::Random(8, 8).cwiseAbs();
  for (int r = 0; r < 8; ++r) att.row(r) /= att.row(r).sum();
  const std::vector<AttentionStack> stacks{AttentionStack{{att}}};
  const std::vector<int> head{1};
  const Vector a = attention_sentence_features(seq, stacks, head, {}, 1);
  for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(a(j), att(1, 3 + j));
}

TEST(Pooling, MatchesBruteForceOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto f = docrel::testing::random_pooling_fixture(rng);
    const Vector a = attention_sentence_features(f.seq, f.attention, f.head_rows, f.tail_rows,
                                                 f.last_layers);
    const auto expected = docrel::testing::brute_force_pooling(f.seq, f.attention, f.head_rows,
                                                               f.tail_rows, f.last_layers);
    ASSERT_EQ(a.size(), static_cast<Eigen::Index>(expected.size()));
    for (std::size_t j = 0; j < expected.size(); ++j) {
      EXPECT_NEAR(a(static_cast<Eigen::Index>(j)), expected[j], 1e-12) << "trial " << trial;
    }
  }
}

TEST(Pooling, LayerCountOutOfRange) {
  std::mt19937_64 rng(5);
  const auto f = docrel::testing::random_pooling_fixture(rng);
  const int layers = static_cast<int>(f.attention[0].size());
  EXPECT_THROW(attention_sentence_features(f.seq, f.attention, f.head_rows, f.tail_rows,
                                           layers + 1),
               ConfigError);
  EXPECT_THROW(attention_sentence_features(f.seq, f.attention, f.head_rows, f.tail_rows, 0),
               ConfigError);
}

TEST(Pooling, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    auto f = docrel::testing::random_pooling_fixture(rng);
    const Vector a0 = attention_sentence_features(f.seq, f.attention, f.head_rows, f.tail_rows,
                                                  f.last_layers);
    const Vector weights = Vector::Random(a0.size());
    std::vector<AttentionStack> grad;
    attention_sentence_features_backward(f.seq, f.attention, f.head_rows, f.tail_rows,
                                         f.last_layers, weights, grad);
    const double h = 1e-7;
    for (std::size_t w = 0; w < f.attention.size(); ++w) {
      for (std::size_t l = 0; l < f.attention[w].size(); ++l) {
        for (std::size_t hd = 0; hd < f.attention[w][l].size(); ++hd) {
          Matrix& m = f.attention[w][l][hd];
          for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
              const double keep = m(r, c);
              m(r, c) = keep + h;
              const double up = weights.dot(attention_sentence_features(
                  f.seq, f.attention, f.head_rows, f.tail_rows, f.last_layers));
              m(r, c) = keep - h;
              const double down = weights.dot(attention_sentence_features(
                  f.seq, f.attention, f.head_rows, f.tail_rows, f.last_layers));
              m(r, c) = keep;
              double analytic = 0.0;
              if (l < grad[w].size() && hd < grad[w][l].size() && grad[w][l][hd].size() > 0) {
                analytic = grad[w][l][hd](r, c);
              }
              EXPECT_NEAR(analytic, (up - down) / (2 * h), 1e-6);
            }
          }
        }
      }
    }
  }
}
