#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "docrel/encoder.hpp"
#include "docrel/errors.hpp"
#include "fixtures.hpp"
#include "long_document.hpp"

using namespace docrel;

namespace {

EncoderConfig small_config(int vocab) {
  EncoderConfig c;
  c.num_layers = 2;
  c.num_heads = 2;
  c.model_dim = 8;
  c.ffn_dim = 16;
  c.vocab_size = vocab;
  c.max_positions = 64;
  return c;
}

std::vector<int> random_ids(int n, int vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, vocab - 1);
  std::vector<int> ids(n);
  for (int& id : ids) id = pick(rng);
  return ids;
}

}  // namespace

TEST(Encoder, ConfigValidation) {
  EncoderConfig c = small_config(10);
  EXPECT_NO_THROW(c.validate());
  c.num_heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config(10);
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Encoder, ShapesAndRowStochasticAttention) {
  const EncoderParams p = EncoderParams::random(small_config(20), 3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto ids = random_ids(7 + static_cast<int>(seed), 20, seed);
    const EncoderOutput out = encode(ids, p);
    ASSERT_EQ(out.embeddings.rows(), static_cast<Eigen::Index>(ids.size()));
    ASSERT_EQ(out.embeddings.cols(), 8);
    ASSERT_EQ(out.attention.size(), 2u);
    for (const auto& layer : out.attention) {
      ASSERT_EQ(layer.size(), 2u);
      for (const Matrix& a : layer) {
        EXPECT_TRUE((a.array() >= 0.0).all());
        EXPECT_LT((a.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(Encoder, ZeroKeysGiveUniformAttention) {
  EncoderParams p = EncoderParams::random(small_config(20), 4);
  for (auto& layer : p.layers) {
    layer.wk.setZero();
    layer.bk.setZero();
  }
  const auto ids = random_ids(9, 20, 1);
  const EncoderOutput out = encode(ids, p);
  for (const auto& layer : out.attention) {
    for (const Matrix& a : layer) {
      EXPECT_LT((a.array() - 1.0 / 9.0).abs().maxCoeff(), 1e-15);
    }
  }
}

TEST(Encoder, HandSetProjectionsMatchScalarSoftmax) {
  EncoderConfig c;
  c.num_layers = 1;
  c.num_heads = 1;
  c.model_dim = 2;
  c.ffn_dim = 2;
  c.vocab_size = 3;
  c.max_positions = 3;
  EncoderParams p = EncoderParams::zeros(c);
  p.token_embedding << 1.0, -2.0, 0.5, 3.0, 2.0, 2.5;
  p.position_embedding << 0.0, 0.0, 0.3, -0.1, -0.2, 0.4;
  p.embed_ln_gain << 1.5, 0.5;
  p.embed_ln_bias << 0.1, -0.3;
  LayerParams& l = p.layers[0];
  l.wq << 0.7, -0.4, 0.2, 0.9;
  l.bq << 0.05, -0.1;
  l.wk << -0.3, 0.8, 0.6, 0.1;
  l.bk << 0.2, 0.0;
  const std::vector<int> ids{0, 1, 2};

  // scalar evaluation
  double x[3][2];
  for (int i = 0; i < 3; ++i) {
    const double a = p.token_embedding(ids[i], 0) + p.position_embedding(i, 0);
    const double b = p.token_embedding(ids[i], 1) + p.position_embedding(i, 1);
    const double mean = (a + b) / 2.0;
    const double var = ((a - mean) * (a - mean) + (b - mean) * (b - mean)) / 2.0;
    const double inv = 1.0 / std::sqrt(var + c.layer_norm_eps);
    x[i][0] = (a - mean) * inv * 1.5 + 0.1;
    x[i][1] = (b - mean) * inv * 0.5 - 0.3;
  }
  double q[3][2], k[3][2];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      q[i][j] = x[i][0] * l.wq(0, j) + x[i][1] * l.wq(1, j) + l.bq(0, j);
      k[i][j] = x[i][0] * l.wk(0, j) + x[i][1] * l.wk(1, j) + l.bk(0, j);
    }
  }
  const EncoderOutput out = encode(ids, p);
  for (int i = 0; i < 3; ++i) {
    double s[3], z = 0.0;
    for (int j = 0; j < 3; ++j) {
      s[j] = std::exp((q[i][0] * k[j][0] + q[i][1] * k[j][1]) / std::sqrt(2.0));
      z += s[j];
    }
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(out.attention[0][0](i, j), s[j] / z, 1e-12);
  }
}

TEST(Encoder, DeterministicAndDropoutOnlyWithRng) {
  EncoderConfig c = small_config(20);
  c.dropout = 0.1;
  const EncoderParams p = EncoderParams::random(c, 5);
  const auto ids = random_ids(10, 20, 2);
  const EncoderOutput a = encode(ids, p);
  const EncoderOutput b = encode(ids, p);
  EXPECT_EQ(a.embeddings, b.embeddings);
  const EncoderTrace t = encode_traced(ids, p);
  EXPECT_EQ(t.output.embeddings, a.embeddings);
  std::mt19937_64 rng(1);
  const EncoderTrace d = encode_traced(ids, p, &rng);
  EXPECT_NE(d.output.embeddings, a.embeddings);
  // exposed attention is taken before dropout
  for (std::size_t l = 0; l < d.output.attention.size(); ++l) {
    for (const Matrix& m : d.output.attention[l]) {
      EXPECT_LT((m.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Encoder, RejectsBadInput) {
  const EncoderParams p = EncoderParams::random(small_config(20), 5);
  EXPECT_THROW(encode(std::vector<int>{}, p), ConfigError);
  EXPECT_THROW(encode(std::vector<int>{1, 25}, p), ConfigError);
  EXPECT_THROW(encode(std::vector<int>(65, 1), p), ConfigError);
}

TEST(WindowMerge, SingleWindowIsBitwiseIdentity) {
  const Document d = docrel::testing::small_document();
  const WordTokenizer tok = WordTokenizer::from_corpus({d});
  const EncoderParams p = EncoderParams::random(small_config(tok.vocab_size()), 6);
  const auto seq = build_sequence(d, tok, 1, 64);
  const WindowedEncoding w = encode_with_windows(seq, p);
  const EncoderOutput direct = encode(seq.ids, p);
  EXPECT_EQ(w.embeddings, direct.embeddings);
  ASSERT_EQ(w.window_attention.size(), 1u);
  EXPECT_EQ(w.window_attention[0], direct.attention);
}

TEST(WindowMerge, OverlapIsMeanOfWindowOutputs) {
  // |H| = 1, max_len 24: B = 20, D = 30 -> windows D[0:20) and D[10:30).
  const Document d = docrel::testing::long_document(3, 10, 1);
  const WordTokenizer tok = WordTokenizer::from_corpus({d});
  const EncoderParams p = EncoderParams::random(small_config(tok.vocab_size()), 7);
  const auto seq = build_sequence(d, tok, 0, 24);
  ASSERT_EQ(seq.windows.size(), 2u);
  const EncoderOutput u = encode(seq.windows[0], p);
  const EncoderOutput v = encode(seq.windows[1], p);
  const WindowedEncoding w = encode_with_windows(seq, p);
  const int pre = seq.prefix_length();
  for (int i = 0; i < 30; ++i) {
    const int pos = pre + i;
    RowVector expected;
    if (i < 10) {
      expected = u.embeddings.row(pos);
    } else if (i >= 20) {
      expected = v.embeddings.row(pre + i - 10);
    } else {
      expected = (u.embeddings.row(pos) + v.embeddings.row(pre + i - 10)) / 2.0;
    }
    EXPECT_EQ(w.embeddings.row(pos), expected) << i;
  }
  // prefix rows are covered by both windows
  EXPECT_EQ(w.embeddings.row(0), (u.embeddings.row(0) + v.embeddings.row(0)) / 2.0);
}

TEST(WindowMerge, ConstantEncoderGivesConstantOutput) {
  // 600/505 fixture; every input row identical, so every output row is too.
  const Document d = docrel::testing::long_document(60, 10, 4);
  const WordTokenizer tok = WordTokenizer::from_corpus({d});
  EncoderConfig c = small_config(tok.vocab_size());
  c.max_positions = 512;
  EncoderParams p = EncoderParams::random(c, 8);
  for (Eigen::Index r = 1; r < p.token_embedding.rows(); ++r) {
    p.token_embedding.row(r) = p.token_embedding.row(0);
  }
  p.position_embedding.setZero();
  const auto seq = build_sequence(d, tok, 0, 512);
  ASSERT_EQ(seq.windows.size(), 2u);
  const WindowedEncoding w = encode_with_windows(seq, p);
  const RowVector first = w.embeddings.row(0);
  EXPECT_LT((w.embeddings.rowwise() - first).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WindowMerge, SplitGradientIsAdjoint) {
  const Document d = docrel::testing::long_document(3, 10, 1);
  const WordTokenizer tok = WordTokenizer::from_corpus({d});
  const auto seq = build_sequence(d, tok, 0, 24);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<EncoderOutput> outs(2);
  for (int w = 0; w < 2; ++w) {
    outs[w].embeddings = Matrix::NullaryExpr(seq.windows[w].length(), 4, [&] { return n(rng); });
  }
  const Matrix g = Matrix::NullaryExpr(seq.length(), 4, [&] { return n(rng); });
  const WindowedEncoding merged = merge_windows(seq, outs);
  const auto split = split_embedding_gradient(seq, g, 4);
  const double lhs = (merged.embeddings.array() * g.array()).sum();
  double rhs = 0.0;
  for (int w = 0; w < 2; ++w) rhs += (outs[w].embeddings.array() * split[w].array()).sum();
  EXPECT_NEAR(lhs, rhs, 1e-10);
}
