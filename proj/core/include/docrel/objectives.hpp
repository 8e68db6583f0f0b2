#pragma once

// Multi-label binary cross-entropy objectives and their joint combination.

#include <span>
#include <vector>

#include "docrel/encoder.hpp"

namespace docrel {

inline constexpr double kProbabilityClamp = 1e-12;
inline constexpr double kDefaultLambda1 = 1e-4;

struct LossWeights {
  double lambda1 = kDefaultLambda1;        // attention-guided evidence loss
  bool include_plain_evidence_loss = false;
  double lambda2 = kDefaultLambda1;        // plain evidence loss, when enabled

  void validate() const;  // throws ConfigError
};

// Mean binary cross-entropy over every entry; probabilities are clamped to
// [eps, 1 - eps] before taking logarithms.
double binary_cross_entropy(const Matrix& probabilities, const Matrix& labels);

// Mean over all (tail, relation) entries.
double relation_loss(const Matrix& probabilities, const Matrix& labels);

// One supervised (pair, gold relation) term: predicted per-sentence
// probabilities against binary gold evidence.
struct EvidenceTerm {
  Vector probabilities;
  Vector targets;
};

// (1/N_t) sum over terms of the mean per-sentence cross-entropy; 0 when there
// are no terms.
double evidence_loss(std::span<const EvidenceTerm> terms);

struct LossBreakdown {
  double relation = 0.0;
  double evidence_attention = 0.0;
  double evidence_plain = 0.0;
  double total = 0.0;
};

double joint_loss(double relation, double evidence_attention, const LossWeights& weights,
                  double evidence_plain = 0.0);

// dL/d(logit) for a mean cross-entropy over `count` sigmoid outputs, scaled.
Matrix bce_logit_gradient(const Matrix& probabilities, const Matrix& labels, double scale);
Vector bce_logit_gradient(const Vector& probabilities, const Vector& labels, double scale);

}  // namespace docrel
