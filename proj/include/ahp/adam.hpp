/**
 * @file adam.hpp
 * @brief Adam with bias correction and optional global gradient-norm clipping.
 */
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>

#include "ahp/autodiff.hpp"

namespace ahp {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::map<std::string, Matrix> first_moment;   // keyed by parameter name
  std::map<std::string, Matrix> second_moment;
};

/// L2 norm of all gradients taken together.
double global_grad_norm(std::span<Parameter* const> params);

/// One Adam update over `params`. When `clip` is set the gradients are first
/// rescaled so their global norm is at most *clip. Gradients are zeroed after.
/// Throws InvariantError if any parameter has no gradient.
void adam_step(std::span<Parameter* const> params, AdamState& state, double lr, std::optional<double> clip);

}  // namespace ahp
