#include "sadm/nn/params.hpp"

#include "sadm/core/error.hpp"

namespace sadm::nn {

Tensor& ParamStore::add(const std::string& name, Tensor init) {
  auto [it, inserted] = params_.emplace(name, std::move(init));
  if (!inserted) throw ConfigError("duplicate parameter " + name);
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [k, v] : params_) out.push_back(k);
  return out;
}

std::size_t ParamStore::count() const {
  std::size_t n = 0;
  for (const auto& [k, v] : params_) n += v.size();
  return n;
}

std::size_t ParamStore::count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& [k, v] : params_)
    if (k.rfind(prefix, 0) == 0) n += v.size();
  return n;
}

Var Binding::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const Tensor& value = store_->get(name);
  Var v = trainable_ ? Var::leaf(value) : Var::constant(value);
  bound_.emplace(name, v);
  return v;
}

TensorMap Binding::gradients() const {
  TensorMap out;
  for (const auto& [name, var] : bound_) {
    if (var.grad().size() == var.value().size()) out.emplace(name, var.grad());
  }
  return out;
}

void accumulate(TensorMap& dst, const TensorMap& src, double weight) {
  for (const auto& [name, g] : src) {
    auto it = dst.find(name);
    if (it == dst.end()) it = dst.emplace(name, Tensor(g.shape())).first;
    Tensor& d = it->second;
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += weight * g[i];
  }
}

Tensor Initializer::uniform(Shape shape, double scale) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (double& v : t.storage()) v = dist(rng_);
  return t;
}

}  // namespace sadm::nn
