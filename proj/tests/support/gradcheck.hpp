#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sadm/nn/autograd.hpp"

namespace sadm::testing {

/// Largest relative error between reverse-mode gradients and central differences of a scalar
/// function of several tensors. Denominator floor 1e-6.
inline double max_gradient_error(std::vector<Tensor> inputs,
                                 const std::function<nn::Var(const std::vector<nn::Var>&)>& fn,
                                 double step = 1e-5) {
  std::vector<nn::Var> leaves;
  for (const auto& t : inputs) leaves.push_back(nn::Var::leaf(t));
  nn::backward(fn(leaves));

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      auto eval = [&](double delta) {
        std::vector<nn::Var> vars;
        for (std::size_t j = 0; j < inputs.size(); ++j) {
          Tensor t = inputs[j];
          if (j == k) t[i] += delta;
          vars.push_back(nn::Var::constant(std::move(t)));
        }
        return fn(vars).item();
      };
      const double numeric = (eval(step) - eval(-step)) / (2.0 * step);
      const double analytic = leaves[k].grad().empty() ? 0.0 : leaves[k].grad()[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
  }
  return worst;
}

}  // namespace sadm::testing
