#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ncae/error.hpp"
#include "ncae/tensor.hpp"

namespace ncae {

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  static AdamState for_params(const ParamStore& params, double learning_rate) {
    AdamState s;
    s.learning_rate = learning_rate;
    for (const auto& p : params.params()) {
      s.first_moment.emplace_back(p.size(), 0.0);
      s.second_moment.emplace_back(p.size(), 0.0);
    }
    return s;
  }
};

/// One bias-corrected Adam update using the gradients stored in `params`.
/// Throws NonFiniteError (leaving params and state untouched) if any gradient
/// is NaN or infinite.
inline void adam_step(ParamStore& params, AdamState& state) {
  auto& ps = params.params();
  if (state.first_moment.size() != ps.size() || state.second_moment.size() != ps.size())
    throw ShapeMismatch("adam: optimizer state does not match parameter store");
  for (std::size_t j = 0; j < ps.size(); ++j) {
    if (state.first_moment[j].size() != ps[j].size() || state.second_moment[j].size() != ps[j].size())
      throw ShapeMismatch("adam: moment shape mismatch for " + ps[j].name);
    for (double g : ps[j].grad)
      if (!std::isfinite(g)) throw NonFiniteError("adam: non-finite gradient in " + ps[j].name);
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t j = 0; j < ps.size(); ++j) {
    auto& value = ps[j].value;
    const auto& grad = ps[j].grad;
    auto& m = state.first_moment[j];
    auto& v = state.second_moment[j];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace ncae
