#include <gtest/gtest.h>

#include <cmath>

#include "docrel/optimizer.hpp"
#include "fixtures.hpp"

using namespace docrel;

namespace {

ModelParameters tiny() {
  return ModelParameters::random(docrel::testing::tiny_model_config(12, 2), 4);
}

}  // namespace

TEST(AdamW, LinearWarmup) {
  const ModelParameters p = tiny();
  AdamWConfig c;
  AdamW opt(p, c, 100);  // 6 warmup steps
  EXPECT_EQ(opt.warmup_scale(), 0.0);
  ModelParameters params = p;
  const ModelParameters g = p.zeros_like();
  for (int s = 1; s <= 8; ++s) {
    opt.step(params, g);
    EXPECT_DOUBLE_EQ(opt.warmup_scale(), std::min(1.0, s / 6.0));
  }
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  ModelParameters p = tiny();
  AdamWConfig c;
  c.weight_decay = 0.0;
  c.warmup_fraction = 0.0;
  AdamW opt(p, c, 10);
  ModelParameters g = p.zeros_like();
  g.encoder.token_embedding(3, 2) = 0.5;
  g.relation.bias(0, 1) = -2.0;
  const ModelParameters before = p;
  opt.step(p, g);
  // bias-corrected first step is lr * sign(g)
  EXPECT_NEAR(p.encoder.token_embedding(3, 2), before.encoder.token_embedding(3, 2) - c.encoder_lr,
              1e-12);
  EXPECT_NEAR(p.relation.bias(0, 1), before.relation.bias(0, 1) + c.head_lr, 1e-12);
  EXPECT_EQ(p.encoder.token_embedding(0, 0), before.encoder.token_embedding(0, 0));
}

TEST(AdamW, DecayExcludesBiasesAndGains) {
  ModelParameters p = tiny();
  p.relation.bias.setConstant(1.0);
  p.encoder.layers[0].ln1_gain.setConstant(1.0);
  AdamWConfig c;
  c.warmup_fraction = 0.0;
  c.weight_decay = 0.5;
  AdamW opt(p, c, 10);
  const ModelParameters before = p;
  opt.step(p, p.zeros_like());
  EXPECT_EQ(p.relation.bias, before.relation.bias);
  EXPECT_EQ(p.encoder.layers[0].ln1_gain, before.encoder.layers[0].ln1_gain);
  EXPECT_NEAR(p.relation.weights[0](0, 0), before.relation.weights[0](0, 0) * (1 - 0.5 * c.head_lr),
              1e-15);
}
