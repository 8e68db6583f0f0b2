#include "docrel/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "docrel/errors.hpp"

namespace docrel {

namespace {

double clamped_bce(double p, double y) {
  const double q = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

}  // namespace

void LossWeights::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("loss weights must be >= 0");
}

double binary_cross_entropy(const Matrix& probabilities, const Matrix& labels) {
  if (probabilities.rows() != labels.rows() || probabilities.cols() != labels.cols()) {
    throw ValidationError("prediction/label shape mismatch");
  }
  if (probabilities.size() == 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index j = 0; j < probabilities.cols(); ++j) {
    for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
      sum += clamped_bce(probabilities(i, j), labels(i, j));
    }
  }
  return sum / static_cast<double>(probabilities.size());
}

double relation_loss(const Matrix& probabilities, const Matrix& labels) {
  return binary_cross_entropy(probabilities, labels);
}

double evidence_loss(std::span<const EvidenceTerm> terms) {
  if (terms.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& term : terms) {
    if (term.probabilities.size() != term.targets.size()) {
      throw ValidationError("evidence prediction/target length mismatch");
    }
    sum += binary_cross_entropy(term.probabilities, term.targets);
  }
  return sum / static_cast<double>(terms.size());
}

double joint_loss(double relation, double evidence_attention, const LossWeights& weights,
                  double evidence_plain) {
  double loss = relation + weights.lambda1 * evidence_attention;
  if (weights.include_plain_evidence_loss) loss += weights.lambda2 * evidence_plain;
  return loss;
}

Matrix bce_logit_gradient(const Matrix& probabilities, const Matrix& labels, double scale) {
  return (probabilities - labels) * scale;
}

Vector bce_logit_gradient(const Vector& probabilities, const Vector& labels, double scale) {
  return (probabilities - labels) * scale;
}

}  // namespace docrel
