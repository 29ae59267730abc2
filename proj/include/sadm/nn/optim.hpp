#pragma once

#include "sadm/nn/params.hpp"

namespace sadm::nn {

/// base * decay^floor(epoch / every)
double step_decay_lr(double base, double decay, int every, int epoch);

/// Adam with bias correction. Moment buffers are keyed like the parameters so they can be
/// checkpointed next to them.
class Adam {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  explicit Adam(Options opts) : opts_(opts) {}

  /// Applies one update to every parameter that has an entry in `grads`.
  void step(ParamStore& params, const TensorMap& grads, double lr);

  long steps() const { return steps_; }
  /// Moments flattened as "adam.m.<name>" / "adam.v.<name>" plus "adam.steps".
  TensorMap state() const;
  void load_state(const TensorMap& state);

 private:
  Options opts_;
  long steps_ = 0;
  TensorMap m_;
  TensorMap v_;
};

}  // namespace sadm::nn
