#include "ahp/adam.hpp"

#include <cmath>

namespace ahp {

double global_grad_norm(std::span<Parameter* const> params) {
  double sq = 0.0;
  for (const Parameter* p : params)
    for (double g : p->grad.data) sq += g * g;
  return std::sqrt(sq);
}

void adam_step(std::span<Parameter* const> params, AdamState& state, double lr, std::optional<double> clip) {
  for (const Parameter* p : params)
    if (!p->grad_ready) throw InvariantError("adam_step: parameter '" + p->name + "' has no gradient");

  double factor = 1.0;
  if (clip) {
    const double norm = global_grad_norm(params);
    if (norm > *clip) factor = *clip / norm;
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (Parameter* p : params) {
    auto& m = state.first_moment[p->name];
    auto& v = state.second_moment[p->name];
    if (!m.same_shape(p->value)) m = Matrix(p->value.rows, p->value.cols);
    if (!v.same_shape(p->value)) v = Matrix(p->value.rows, p->value.cols);
    for (std::size_t i = 0; i < p->value.data.size(); ++i) {
      const double g = p->grad.data[i] * factor;
      m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * g;
      v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * g * g;
      const double mhat = m.data[i] / c1;
      const double vhat = v.data[i] / c2;
      p->value.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    p->zero_grad();
  }
}

}  // namespace ahp
