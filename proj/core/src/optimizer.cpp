#include "docrel/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace docrel {

namespace {

bool is_encoder(const std::string& name) { return name.rfind("encoder.", 0) == 0; }

bool decays(const std::string& name) {
  return name.find("bias") == std::string::npos && name.find("_gain") == std::string::npos &&
         name.find(".b") == std::string::npos;
}

}  // namespace

AdamW::AdamW(const ModelParameters& shape, AdamWConfig config, long total_steps)
    : config_(config), total_steps_(std::max(1L, total_steps)) {
  shape.visit([&](const std::string&, const Matrix& m) {
    first_moment_.push_back(Matrix::Zero(m.rows(), m.cols()));
    second_moment_.push_back(Matrix::Zero(m.rows(), m.cols()));
  });
}

double AdamW::warmup_scale() const {
  const double warmup = std::floor(config_.warmup_fraction * static_cast<double>(total_steps_));
  if (warmup < 1.0) return 1.0;
  return std::min(1.0, static_cast<double>(step_) / warmup);
}

void AdamW::step(ModelParameters& params, const ModelParameters& grads) {
  ++step_;
  const double scale = warmup_scale();
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));

  std::vector<const Matrix*> g;
  grads.visit([&](const std::string&, const Matrix& m) { g.push_back(&m); });
  std::size_t i = 0;
  params.visit([&](const std::string& name, Matrix& p) {
    const Matrix& gi = *g[i];
    Matrix& m = first_moment_[i];
    Matrix& v = second_moment_[i];
    ++i;
    const double lr = scale * (is_encoder(name) ? config_.encoder_lr : config_.head_lr);
    m = config_.beta1 * m + (1.0 - config_.beta1) * gi;
    v = config_.beta2 * v + (1.0 - config_.beta2) * gi.cwiseProduct(gi);
    if (config_.weight_decay > 0.0 && decays(name)) p *= (1.0 - lr * config_.weight_decay);
    p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config_.eps);
  });
}

}  // namespace docrel
