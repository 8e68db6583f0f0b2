#include <gtest/gtest.h>

#include <cmath>

#include "docrel/errors.hpp"
#include "docrel/objectives.hpp"

using namespace docrel;

TEST(Objectives, UniformPredictionsGiveLn2) {
  const Matrix p = Matrix::Constant(3, 4, 0.5);
  Matrix y = Matrix::Zero(3, 4);
  y(0, 1) = 1;
  y(2, 3) = 1;
  EXPECT_NEAR(relation_loss(p, y), std::log(2.0), 1e-15);
  const std::vector<EvidenceTerm> terms{{Vector::Constant(5, 0.5), Vector::Zero(5)},
                                        {Vector::Constant(2, 0.5), Vector::Ones(2)}};
  EXPECT_NEAR(evidence_loss(terms), std::log(2.0), 1e-15);
}

TEST(Objectives, RelationLossHandValue) {
  Matrix p(1, 2), y(1, 2);
  p << 0.9, 0.2;
  y << 1, 0;
  const double expected = -(std::log(0.9) + std::log(0.8)) / 2.0;
  EXPECT_NEAR(expected, 0.164252, 1e-6);
  EXPECT_NEAR(relation_loss(p, y), expected, 1e-15);
}

TEST(Objectives, EvidenceLossHandValue) {
  Vector p(2), y(2);
  p << 0.8, 0.3;
  y << 1, 0;
  const double expected = -(std::log(0.8) + std::log(0.7)) / 2.0;
  EXPECT_NEAR(expected, 0.289909, 1e-6);
  const std::vector<EvidenceTerm> terms{{p, y}};
  EXPECT_NEAR(evidence_loss(terms), expected, 1e-15);
}

TEST(Objectives, EvidenceLossMeansOverTerms) {
  Vector p1(1), y1(1), p2(2), y2(2);
  p1 << 0.6;
  y1 << 1;
  p2 << 0.8, 0.3;
  y2 << 1, 0;
  const std::vector<EvidenceTerm> terms{{p1, y1}, {p2, y2}};
  const double expected = (-std::log(0.6) + -(std::log(0.8) + std::log(0.7)) / 2.0) / 2.0;
  EXPECT_NEAR(evidence_loss(terms), expected, 1e-15);
  EXPECT_EQ(evidence_loss({}), 0.0);
}

TEST(Objectives, ClampKeepsLossFinite) {
  Matrix p(1, 2), y(1, 2);
  p << 1.0, 0.0;
  y << 1, 0;
  EXPECT_LT(relation_loss(p, y), 1e-11);
  y << 0, 1;
  // both entries sit on the clamp; 1 - (1 - eps) is not exactly eps in binary
  const double expected =
      (-std::log(kProbabilityClamp) - std::log(1.0 - (1.0 - kProbabilityClamp))) / 2.0;
  EXPECT_NEAR(relation_loss(p, y), expected, 1e-12);
}

TEST(Objectives, ShapeMismatch) {
  EXPECT_THROW(relation_loss(Matrix::Zero(1, 2), Matrix::Zero(2, 1)), ValidationError);
  const std::vector<EvidenceTerm> bad{{Vector::Zero(2), Vector::Zero(3)}};
  EXPECT_THROW(evidence_loss(bad), ValidationError);
}

TEST(Objectives, JointLoss) {
  LossWeights w;
  EXPECT_EQ(w.lambda1, 1e-4);
  w.lambda1 = 0.1;
  EXPECT_NEAR(joint_loss(0.5, 0.3, w), 0.53, 1e-15);
  w.lambda1 = 0.0;
  const double l_re = 0.123456789012345;
  EXPECT_EQ(joint_loss(l_re, 0.9, w), l_re);
  w.include_plain_evidence_loss = true;
  w.lambda2 = 0.5;
  EXPECT_NEAR(joint_loss(0.5, 0.3, w, 0.2), 0.6, 1e-15);
  w.lambda1 = -1;
  EXPECT_THROW(w.validate(), ConfigError);
}

TEST(Objectives, LogitGradientMatchesFiniteDifferences) {
  Matrix logits(2, 3);
  logits << 0.3, -1.2, 2.0, 0.0, 0.7, -0.4;
  Matrix y(2, 3);
  y << 1, 0, 1, 0, 0, 1;
  auto loss = [&](const Matrix& z) {
    return relation_loss(1.0 / (1.0 + (-z.array()).exp()), y);
  };
  const Matrix p = 1.0 / (1.0 + (-logits.array()).exp());
  const Matrix g = bce_logit_gradient(p, y, 1.0 / 6.0);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      Matrix up = logits, down = logits;
      up(i, j) += 1e-6;
      down(i, j) -= 1e-6;
      EXPECT_NEAR(g(i, j), (loss(up) - loss(down)) / 2e-6, 1e-8);
    }
  }
}
