#pragma once

// Finite-difference gradient check for the built-in models.
//
// L(theta + s e) - L(theta) is obtained by pushing the exact perturbation of
// the touched layer forward as a difference (dz, then relu(z + dz) - relu(z) or
// tanh(a + b) - tanh(a), ...) instead of subtracting two full forward passes.
// The quotient is the same central difference, but its rounding error scales
// with the perturbation rather than with the loss, so coordinates with tiny
// gradients can still be checked at 1e-6 relative error. Zero entries of the
// difference are skipped, which keeps the check cheap.

#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "ncae/grad_check.hpp"
#include "ncae/models.hpp"

namespace ncae {

namespace detail {

// Change of the Euclidean loss when the reconstruction moves by dy, given the
// base residual r = x - y and base loss.
inline double loss_change(const Tensor2D& residual, double base_loss, const Tensor2D& dy) {
  double ds = 0.0;
  for (std::size_t n = 0; n < dy.size(); ++n) {
    const double d = dy.data()[n];
    if (d != 0.0) ds += d * (d - 2.0 * residual.data()[n]);
  }
  if (ds == 0.0) return 0.0;
  const double moved = std::sqrt(std::max(0.0, base_loss * base_loss + ds));
  const double denom = moved + base_loss;
  return denom > 0.0 ? ds / denom : 0.0;
}

inline double relu_difference(double z, double dz) {
  const double moved = z + dz;
  if (z > 0.0 && moved > 0.0) return dz;
  if (!(z > 0.0) && !(moved > 0.0)) return 0.0;
  return std::max(moved, 0.0) - std::max(z, 0.0);
}

// tanh(a + b) - tanh(a) with h = tanh(a).
inline double tanh_difference(double h, double b) {
  if (b == 0.0) return 0.0;
  const double tb = std::tanh(b);
  return tb * ((1.0 - h) * (1.0 + h)) / (1.0 + h * tb);
}

// Bias-free convolution of a difference signal, skipping zero entries.
inline Tensor2D conv_difference(const Tensor2D& d_in, const std::vector<double>& w,
                                const ConvShape& s) {
  const std::size_t steps = d_in.rows();
  const auto half = static_cast<std::ptrdiff_t>(s.kernel / 2);
  Tensor2D out(steps, s.out_channels);
  for (std::size_t src = 0; src < steps; ++src) {
    for (std::size_t i = 0; i < s.in_channels; ++i) {
      const double x = d_in(src, i);
      if (x == 0.0) continue;
      for (std::size_t d = 0; d < s.kernel; ++d) {
        // src = t + d - half  =>  t = src - d + half
        const std::ptrdiff_t t = static_cast<std::ptrdiff_t>(src) - static_cast<std::ptrdiff_t>(d) + half;
        if (t < 0 || t >= static_cast<std::ptrdiff_t>(steps)) continue;
        const double* wr = w.data() + (d * s.in_channels + i) * s.out_channels;
        double* o = out.row(static_cast<std::size_t>(t)).data();
        for (std::size_t c = 0; c < s.out_channels; ++c) o[c] += x * wr[c];
      }
    }
  }
  return out;
}

class NcaeDeltaOracle {
 public:
  NcaeDeltaOracle(const NcaeSpec& spec, const ParamStore& params, const Tensor2D& x)
      : spec_(spec), params_(params), trace_(ncae_trace(spec, params, x)) {
    residual_ = x;
    for (std::size_t n = 0; n < x.size(); ++n) residual_.data()[n] -= trace_.output.data()[n];
    base_loss_ = l2_distance(x, trace_.output);
    inputs_ = {&x, &trace_.act1, &trace_.act2};
    pre_ = {&trace_.pre1, &trace_.pre2, &trace_.output};
  }

  double operator()(std::size_t j, std::size_t i, double step) const {
    const std::size_t layer = j / 2;
    const bool is_bias = j % 2 == 1;
    const auto shape = ncae_layer_shape(spec_, layer);
    const std::size_t steps = residual_.rows();
    Tensor2D d_pre(steps, shape.out_channels);
    if (is_bias) {
      for (std::size_t t = 0; t < steps; ++t) d_pre(t, i) = step;
    } else {
      const std::size_t o = i % shape.out_channels;
      const std::size_t ci = (i / shape.out_channels) % shape.in_channels;
      const std::size_t d = i / (shape.out_channels * shape.in_channels);
      const auto half = static_cast<std::ptrdiff_t>(shape.kernel / 2);
      const Tensor2D& in = *inputs_[layer];
      for (std::size_t t = 0; t < steps; ++t) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + d) - half;
        if (src >= 0 && src < static_cast<std::ptrdiff_t>(steps))
          d_pre(t, o) = step * in(static_cast<std::size_t>(src), ci);
      }
    }
    for (std::size_t l = layer + 1; l < kModelDepth; ++l) {
      const Tensor2D& z = *pre_[l - 1];
      Tensor2D d_act(z.rows(), z.cols());
      for (std::size_t n = 0; n < z.size(); ++n)
        d_act.data()[n] = relu_difference(z.data()[n], d_pre.data()[n]);
      d_pre = conv_difference(d_act, params_.params()[2 * l].value, ncae_layer_shape(spec_, l));
    }
    return loss_change(residual_, base_loss_, d_pre);
  }

 private:
  NcaeSpec spec_;
  const ParamStore& params_;
  NcaeTrace<double> trace_;
  Tensor2D residual_;
  double base_loss_ = 0.0;
  std::vector<const Tensor2D*> inputs_;
  std::vector<const Tensor2D*> pre_;
};

class BaselineDeltaOracle {
 public:
  BaselineDeltaOracle(const BaselineSpec& spec, const ParamStore& params, const Tensor2D& x)
      : spec_(spec), params_(params), x_(x), trace_(baseline_trace(spec, params, x)) {
    residual_ = x;
    for (std::size_t n = 0; n < x.size(); ++n) residual_.data()[n] -= trace_.output.data()[n];
    base_loss_ = l2_distance(x, trace_.output);
  }

  // Parameter order per layer: input_weight, recurrent_weight, bias; then
  // readout.weight, readout.bias.
  double operator()(std::size_t j, std::size_t i, double step) const {
    const std::size_t hid = spec_.hidden_width;
    const std::size_t steps = x_.rows();
    const std::size_t out = spec_.input_channels;
    const auto& ps = params_.params();
    const std::size_t readout_index = 3 * kModelDepth;

    Tensor2D d_top(steps, hid);  // difference of the top hidden sequence
    if (j < readout_index) {
      const std::size_t layer = j / 3;
      const std::size_t kind = j % 3;
      Tensor2D d_seq;  // difference of this layer's input sequence (zero at the perturbed layer)
      for (std::size_t l = layer; l < kModelDepth; ++l) {
        const Tensor2D& input = l == 0 ? x_ : trace_.hidden[l - 1];
        const Tensor2D& h = trace_.hidden[l];
        const std::size_t in = input.cols();
        const auto& wx = ps[3 * l].value;
        const auto& wh = ps[3 * l + 1].value;
        Tensor2D d_h(steps, hid);
        std::vector<double> d_pre(hid);
        for (std::size_t t = 0; t < steps; ++t) {
          std::fill(d_pre.begin(), d_pre.end(), 0.0);
          if (l == layer) {
            if (kind == 0) {
              d_pre[i % hid] += step * input(t, i / hid);
            } else if (kind == 1) {
              const std::size_t src = i / hid;
              if (t > 0) d_pre[i % hid] += step * (h(t - 1, src) + d_h(t - 1, src));
            } else {
              d_pre[i] += step;
            }
          } else {
            for (std::size_t c = 0; c < in; ++c) {
              const double v = d_seq(t, c);
              if (v == 0.0) continue;
              const double* w = wx.data() + c * hid;
              for (std::size_t o = 0; o < hid; ++o) d_pre[o] += v * w[o];
            }
          }
          if (t > 0) {
            for (std::size_t c = 0; c < hid; ++c) {
              const double v = d_h(t - 1, c);
              if (v == 0.0) continue;
              const double* w = wh.data() + c * hid;
              for (std::size_t o = 0; o < hid; ++o) d_pre[o] += v * w[o];
            }
          }
          for (std::size_t o = 0; o < hid; ++o) d_h(t, o) = tanh_difference(h(t, o), d_pre[o]);
        }
        d_seq = std::move(d_h);
      }
      d_top = std::move(d_seq);
    }

    const auto& rw = ps[readout_index].value;
    Tensor2D d_y(steps, out);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t c = 0; c < hid; ++c) {
        const double v = d_top(t, c);
        if (v == 0.0) continue;
        for (std::size_t o = 0; o < out; ++o) d_y(t, o) += v * rw[c * out + o];
      }
      if (j == readout_index) d_y(t, i % out) += step * trace_.hidden.back()(t, i / out);
      if (j == readout_index + 1) d_y(t, i) += step;
    }
    return loss_change(residual_, base_loss_, d_y);
  }

 private:
  BaselineSpec spec_;
  const ParamStore& params_;
  const Tensor2D& x_;
  BaselineTrace<double> trace_;
  Tensor2D residual_;
  double base_loss_ = 0.0;
};

}  // namespace detail

/// Analytic gradient of ||x - model(x)||_2 (from backprop) against central
/// finite differences with step h. `analytic_scale` multiplies the analytic
/// gradient before comparison; values other than 1 inject a known fault.
inline GradCheckReport grad_check_model(const Model& model, const Tensor2D& x, double h,
                                        double analytic_scale = 1.0) {
  Model work = model;
  work.params().zero_grad();
  const double loss = work.accumulate_gradients(x, 1.0);
  if (!std::isfinite(loss)) throw NonFiniteError("grad_check: non-finite loss at the base point");
  if (analytic_scale != 1.0)
    for (auto& p : work.params().params())
      for (auto& g : p.grad) g *= analytic_scale;

  if (const auto* s = std::get_if<NcaeSpec>(&model.spec())) {
    const detail::NcaeDeltaOracle oracle(*s, model.params(), x);
    return grad_check_deltas(oracle, work.params(), h);
  }
  const detail::BaselineDeltaOracle oracle(std::get<BaselineSpec>(model.spec()), model.params(), x);
  return grad_check_deltas(oracle, work.params(), h);
}

}  // namespace ncae
