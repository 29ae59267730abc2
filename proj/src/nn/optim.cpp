#include "sadm/nn/optim.hpp"

#include <cmath>

#include "sadm/core/error.hpp"

namespace sadm::nn {

double step_decay_lr(double base, double decay, int every, int epoch) {
  if (every < 1 || epoch < 0) throw ConfigError("learning-rate schedule needs every >= 1 and epoch >= 0");
  double lr = base;
  for (int k = 0; k < epoch / every; ++k) lr *= decay;
  return lr;
}

void Adam::step(ParamStore& params, const TensorMap& grads, double lr) {
  ++steps_;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(steps_));
  for (const auto& [name, g] : grads) {
    Tensor& p = params.get(name);
    require_same_shape(p, g, name.c_str());
    auto mit = m_.find(name);
    if (mit == m_.end()) mit = m_.emplace(name, Tensor(p.shape())).first;
    auto vit = v_.find(name);
    if (vit == v_.end()) vit = v_.emplace(name, Tensor(p.shape())).first;
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g[i];
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + opts_.eps);
    }
  }
}

TensorMap Adam::state() const {
  TensorMap out;
  for (const auto& [k, t] : m_) out.emplace("adam.m." + k, t);
  for (const auto& [k, t] : v_) out.emplace("adam.v." + k, t);
  out.emplace("adam.steps", Tensor({1}, {static_cast<double>(steps_)}));
  return out;
}

void Adam::load_state(const TensorMap& state) {
  m_.clear();
  v_.clear();
  steps_ = 0;
  for (const auto& [k, t] : state) {
    if (k == "adam.steps") {
      steps_ = static_cast<long>(t[0]);
    } else if (k.rfind("adam.m.", 0) == 0) {
      m_.emplace(k.substr(7), t);
    } else if (k.rfind("adam.v.", 0) == 0) {
      v_.emplace(k.substr(7), t);
    }
  }
}

}  // namespace sadm::nn
