#pragma once

// Central finite-difference verification of analytic gradients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ncae/error.hpp"
#include "ncae/tensor.hpp"

namespace ncae {

struct GradCheckEntry {
  std::string name;
  std::size_t count = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<GradCheckEntry> per_param;
};

inline double gradient_relative_error(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-12});
  return std::fabs(analytic - numeric) / denom;
}

/// Core checker. `loss_delta(j, i, step)` must return L(theta + step * e_ji) - L(theta)
/// for coordinate i of parameter j; the numeric derivative is the central quotient
/// (delta(+h) - delta(-h)) / 2h. `analytic.grad` holds the gradients under test.
template <class DeltaFn>
GradCheckReport grad_check_deltas(DeltaFn&& loss_delta, const ParamStore& analytic, double h) {
  if (!(h > 0.0)) throw InvalidArgument("grad_check: step h must be positive");
  GradCheckReport report;
  const auto& ps = analytic.params();
  for (std::size_t j = 0; j < ps.size(); ++j) {
    GradCheckEntry entry{ps[j].name, ps[j].size()};
    for (std::size_t i = 0; i < ps[j].size(); ++i) {
      const double plus = loss_delta(j, i, h);
      const double minus = loss_delta(j, i, -h);
      if (!std::isfinite(plus) || !std::isfinite(minus))
        throw NonFiniteError("grad_check: non-finite loss while perturbing " + ps[j].name);
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = ps[j].grad[i];
      const double err = gradient_relative_error(a, numeric);
      if (i == 0 || err > entry.max_rel_error) {
        entry.max_rel_error = err;
        entry.worst_index = i;
        entry.worst_analytic = a;
        entry.worst_numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.per_param.push_back(std::move(entry));
  }
  return report;
}

/// Generic form: `loss` maps a parameter store (in precision Scalar) to the
/// scalar loss, re-evaluated from scratch at theta +- h. Cancellation in
/// L(theta+h) - L(theta-h) limits this to coordinates whose gradient is not tiny
/// relative to eps * L / h; grad_check_model avoids that for the built-in models.
template <class Scalar = double, class LossFn>
GradCheckReport grad_check(LossFn&& loss, const ParamStore& params, double h) {
  auto work = params.template cast<Scalar>();
  const Scalar base = loss(static_cast<const BasicParamStore<Scalar>&>(work));
  using std::isfinite;
  if (!isfinite(base)) throw NonFiniteError("grad_check: non-finite loss at the base point");
  auto delta = [&](std::size_t j, std::size_t i, double step) {
    auto& v = work.params()[j].value[i];
    const Scalar original = v;
    v = original + static_cast<Scalar>(step);
    const Scalar moved = loss(static_cast<const BasicParamStore<Scalar>&>(work));
    v = original;
    return static_cast<double>(moved - base);
  };
  return grad_check_deltas(delta, params, h);
}

}  // namespace ncae
