#pragma once

#include <string>
#include <vector>

#include "docrel/model.hpp"

namespace docrel {

struct AdamWConfig {
  double encoder_lr = 1e-5;
  double head_lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double warmup_fraction = 0.06;
};

// Adam with decoupled weight decay. Encoder parameters and the freshly
// initialized heads use separate base rates; both follow a linear warmup
// over the first warmup_fraction of total_steps.
class AdamW {
 public:
  AdamW(const ModelParameters& shape, AdamWConfig config, long total_steps);

  void step(ModelParameters& params, const ModelParameters& grads);
  double warmup_scale() const;
  long steps_taken() const { return step_; }

 private:
  AdamWConfig config_;
  long total_steps_;
  long step_ = 0;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
};

}  // namespace docrel
