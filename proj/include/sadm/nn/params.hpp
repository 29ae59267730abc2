#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sadm/nn/autograd.hpp"

namespace sadm::nn {

using TensorMap = std::map<std::string, Tensor>;

/// Named parameter arrays, keyed by module path ("dynamics.encoder.wx", ...).
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor init);
  bool contains(const std::string& name) const { return params_.count(name) > 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  const TensorMap& entries() const { return params_; }
  TensorMap& entries() { return params_; }
  std::vector<std::string> names() const;
  /// Total scalar count.
  std::size_t count() const;
  /// Scalar count of entries whose key starts with `prefix`.
  std::size_t count(const std::string& prefix) const;

 private:
  TensorMap params_;
};

/// Graph handles for one forward pass. Trainable bindings create gradient leaves.
class Binding {
 public:
  Binding(const ParamStore& store, bool trainable) : store_(&store), trainable_(trainable) {}

  Var operator()(const std::string& name);
  bool trainable() const { return trainable_; }
  /// Gradients of every bound parameter after backward(); unbound or untouched entries are omitted.
  TensorMap gradients() const;

 private:
  const ParamStore* store_;
  bool trainable_;
  std::map<std::string, Var> bound_;
};

/// Adds `src` into `dst` key by key, creating zero entries as needed.
void accumulate(TensorMap& dst, const TensorMap& src, double weight = 1.0);

/// Parameter initialization helpers: uniform(-scale, scale) from a seeded engine.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}
  Tensor uniform(Shape shape, double scale);
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace sadm::nn
