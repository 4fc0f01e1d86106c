#pragma once

// The non-compression auto-encoder (three same-padded convolutions, no
// bottleneck in time or width) and a three-layer tanh recurrent
// reconstruction baseline.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ncae/error.hpp"
#include "ncae/layers.hpp"
#include "ncae/rng.hpp"
#include "ncae/tensor.hpp"

namespace ncae {

inline constexpr std::size_t kModelDepth = 3;

enum class Architecture : std::uint32_t { ncae = 1, recurrent_baseline = 2 };

inline const char* architecture_name(Architecture a) {
  return a == Architecture::ncae ? "ncae" : "baseline";
}

struct NcaeSpec {
  std::size_t kernel_size = 3;
  std::size_t hidden_width = 64;
  std::size_t input_channels = 13;
  std::size_t depth = kModelDepth;

  void validate() const {
    if (kernel_size == 0 || kernel_size % 2 == 0)
      throw InvalidArgument("ncae: kernel size must be odd, got " + std::to_string(kernel_size));
    if (input_channels == 0) throw InvalidArgument("ncae: input_channels must be positive");
    if (hidden_width < input_channels)
      throw InvalidArgument("ncae: hidden width " + std::to_string(hidden_width) +
                            " is below input width " + std::to_string(input_channels) +
                            " (would compress the representation)");
    if (depth != kModelDepth) throw InvalidArgument("ncae: depth is fixed at 3");
  }

  friend bool operator==(const NcaeSpec&, const NcaeSpec&) = default;
};

struct BaselineSpec {
  std::size_t hidden_width = 64;
  std::size_t input_channels = 13;
  std::size_t depth = kModelDepth;

  void validate() const {
    if (hidden_width == 0 || input_channels == 0)
      throw InvalidArgument("baseline: widths must be positive");
    if (depth != kModelDepth) throw InvalidArgument("baseline: depth is fixed at 3");
  }

  friend bool operator==(const BaselineSpec&, const BaselineSpec&) = default;
};

using ModelSpec = std::variant<NcaeSpec, BaselineSpec>;

inline Architecture architecture_of(const ModelSpec& spec) {
  return std::holds_alternative<NcaeSpec>(spec) ? Architecture::ncae
                                                : Architecture::recurrent_baseline;
}

inline std::size_t input_channels_of(const ModelSpec& spec) {
  return std::visit([](const auto& s) { return s.input_channels; }, spec);
}

namespace detail {

inline ConvShape ncae_layer_shape(const NcaeSpec& s, std::size_t layer) {
  const std::size_t in = layer == 0 ? s.input_channels : s.hidden_width;
  const std::size_t out = layer + 1 == kModelDepth ? s.input_channels : s.hidden_width;
  return {s.kernel_size, in, out};
}

inline std::string conv_name(std::size_t layer, const char* what) {
  return "conv" + std::to_string(layer + 1) + "." + what;
}

inline std::string rnn_name(std::size_t layer, const char* what) {
  return "rnn" + std::to_string(layer + 1) + "." + what;
}

template <class T>
std::span<const T> values(const BasicParamStore<T>& ps, const std::string& name) {
  return ps.at(name).value;
}

}  // namespace detail

/// Declares the parameter tensors of a spec, in checkpoint order, all zero.
inline ParamStore declare_parameters(const ModelSpec& spec) {
  ParamStore ps;
  if (const auto* s = std::get_if<NcaeSpec>(&spec)) {
    for (std::size_t l = 0; l < kModelDepth; ++l) {
      const auto shape = detail::ncae_layer_shape(*s, l);
      ps.add(detail::conv_name(l, "weight"), {shape.kernel, shape.in_channels, shape.out_channels});
      ps.add(detail::conv_name(l, "bias"), {shape.out_channels});
    }
  } else {
    const auto& b = std::get<BaselineSpec>(spec);
    for (std::size_t l = 0; l < kModelDepth; ++l) {
      const std::size_t in = l == 0 ? b.input_channels : b.hidden_width;
      ps.add(detail::rnn_name(l, "input_weight"), {in, b.hidden_width});
      ps.add(detail::rnn_name(l, "recurrent_weight"), {b.hidden_width, b.hidden_width});
      ps.add(detail::rnn_name(l, "bias"), {b.hidden_width});
    }
    ps.add("readout.weight", {b.hidden_width, b.input_channels});
    ps.add("readout.bias", {b.input_channels});
  }
  return ps;
}

// ---------------------------------------------------------------------------
// Forward passes, generic over the scalar so the finite-difference checker can
// evaluate them in extended precision.

template <class T>
struct NcaeTrace {
  BasicTensor2D<T> pre1, act1, pre2, act2, output;
};

template <class T>
NcaeTrace<T> ncae_trace(const NcaeSpec& spec, const BasicParamStore<T>& ps,
                        const BasicTensor2D<T>& x) {
  if (x.cols() != spec.input_channels)
    throw ShapeMismatch("ncae: input has " + std::to_string(x.cols()) + " channels, model expects " +
                        std::to_string(spec.input_channels));
  using detail::conv_name;
  using detail::values;
  NcaeTrace<T> tr;
  tr.pre1 = conv1d_forward<T>(x, values(ps, conv_name(0, "weight")), values(ps, conv_name(0, "bias")),
                              detail::ncae_layer_shape(spec, 0));
  tr.act1 = relu(tr.pre1);
  tr.pre2 = conv1d_forward<T>(tr.act1, values(ps, conv_name(1, "weight")),
                              values(ps, conv_name(1, "bias")), detail::ncae_layer_shape(spec, 1));
  tr.act2 = relu(tr.pre2);
  tr.output = conv1d_forward<T>(tr.act2, values(ps, conv_name(2, "weight")),
                                values(ps, conv_name(2, "bias")), detail::ncae_layer_shape(spec, 2));
  return tr;
}

template <class T>
struct BaselineTrace {
  std::vector<BasicTensor2D<T>> hidden;  // one T x H sequence per recurrent layer
  BasicTensor2D<T> output;
};

template <class T>
BasicTensor2D<T> recurrent_layer_forward(const BasicTensor2D<T>& seq, const RecurrentCellView<T>& cell) {
  BasicTensor2D<T> h(seq.rows(), cell.hidden_size);
  std::vector<T> prev(cell.hidden_size, T(0));
  for (std::size_t t = 0; t < seq.rows(); ++t) {
    prev = recurrent_cell_forward<T>(seq.row(t), prev, cell);
    std::copy(prev.begin(), prev.end(), h.row(t).begin());
  }
  return h;
}

template <class T>
BaselineTrace<T> baseline_trace(const BaselineSpec& spec, const BasicParamStore<T>& ps,
                                const BasicTensor2D<T>& x) {
  if (x.cols() != spec.input_channels)
    throw ShapeMismatch("baseline: input has " + std::to_string(x.cols()) +
                        " channels, model expects " + std::to_string(spec.input_channels));
  using detail::rnn_name;
  using detail::values;
  BaselineTrace<T> tr;
  const BasicTensor2D<T>* seq = &x;
  for (std::size_t l = 0; l < kModelDepth; ++l) {
    RecurrentCellView<T> cell{values(ps, rnn_name(l, "input_weight")),
                              values(ps, rnn_name(l, "recurrent_weight")),
                              values(ps, rnn_name(l, "bias")), seq->cols(), spec.hidden_width};
    tr.hidden.push_back(recurrent_layer_forward(*seq, cell));
    seq = &tr.hidden.back();
  }
  const auto w = values(ps, "readout.weight");
  const auto b = values(ps, "readout.bias");
  const std::size_t hid = spec.hidden_width;
  const std::size_t out = spec.input_channels;
  tr.output = BasicTensor2D<T>(x.rows(), out);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    T* y = tr.output.row(t).data();
    for (std::size_t o = 0; o < out; ++o) y[o] = b[o];
    const T* h = tr.hidden.back().row(t).data();
    for (std::size_t j = 0; j < hid; ++j) {
      const T hj = h[j];
      const T* wr = w.data() + j * out;
      for (std::size_t o = 0; o < out; ++o) y[o] += hj * wr[o];
    }
  }
  return tr;
}

template <class T>
BasicTensor2D<T> model_forward(const ModelSpec& spec, const BasicParamStore<T>& ps,
                               const BasicTensor2D<T>& x) {
  if (const auto* s = std::get_if<NcaeSpec>(&spec)) return ncae_trace(*s, ps, x).output;
  return baseline_trace(std::get<BaselineSpec>(spec), ps, x).output;
}

/// Outputs of every NCAE layer (after its activation, if any), in order.
template <class T>
std::vector<BasicTensor2D<T>> ncae_layer_outputs(const NcaeSpec& spec, const BasicParamStore<T>& ps,
                                                 const BasicTensor2D<T>& x) {
  auto tr = ncae_trace(spec, ps, x);
  return {std::move(tr.act1), std::move(tr.act2), std::move(tr.output)};
}

// ---------------------------------------------------------------------------

class Model {
 public:
  Model(ModelSpec spec, ParamStore params) : spec_(std::move(spec)), params_(std::move(params)) {
    std::visit([](const auto& s) { s.validate(); }, spec_);
    const auto expected = declare_parameters(spec_);
    const auto& got = params_.params();
    if (got.size() != expected.params().size())
      throw ShapeMismatch("model: parameter set does not match spec");
    for (std::size_t i = 0; i < got.size(); ++i) {
      const auto& e = expected.params()[i];
      if (got[i].name != e.name || got[i].shape != e.shape || got[i].value.size() != e.size() ||
          got[i].grad.size() != e.size())
        throw ShapeMismatch("model: parameter " + e.name + " does not match spec");
    }
  }

  const ModelSpec& spec() const noexcept { return spec_; }
  Architecture architecture() const noexcept { return architecture_of(spec_); }
  std::size_t input_channels() const noexcept { return input_channels_of(spec_); }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  Tensor2D forward(const Tensor2D& x) const { return model_forward(spec_, params_, x); }

  /// Computes the reconstruction loss ||x - forward(x)||_2 and adds
  /// scale * d loss / d params into the gradient buffers.
  double accumulate_gradients(const Tensor2D& x, double scale) {
    if (const auto* s = std::get_if<NcaeSpec>(&spec_)) return ncae_backward(*s, x, scale);
    return baseline_backward(std::get<BaselineSpec>(spec_), x, scale);
  }

  friend bool operator==(const Model&, const Model&) = default;

 private:
  static void scale_in_place(Tensor2D& t, double s) {
    if (s != 1.0)
      for (auto& v : t.data()) v *= s;
  }

  double ncae_backward(const NcaeSpec& spec, const Tensor2D& x, double scale) {
    using detail::conv_name;
    const auto tr = ncae_trace(spec, params_, x);
    auto [loss, grad] = l2_loss(x, tr.output);
    scale_in_place(grad, scale);

    const Tensor2D* inputs[kModelDepth] = {&x, &tr.act1, &tr.act2};
    const Tensor2D* pre[kModelDepth] = {&tr.pre1, &tr.pre2, nullptr};
    Tensor2D upstream = std::move(grad);
    for (std::size_t l = kModelDepth; l-- > 0;) {
      auto& w = params_.at(conv_name(l, "weight"));
      auto& b = params_.at(conv_name(l, "bias"));
      Tensor2D input_grad;
      conv1d_backward_accumulate<double>(*inputs[l], w.value, detail::ncae_layer_shape(spec, l),
                                         upstream, w.grad, b.grad, l > 0 ? &input_grad : nullptr);
      if (l > 0) upstream = relu_backward(*pre[l - 1], std::move(input_grad));
    }
    return loss;
  }

  double baseline_backward(const BaselineSpec& spec, const Tensor2D& x, double scale) {
    using detail::rnn_name;
    const auto tr = baseline_trace(spec, params_, x);
    auto [loss, grad] = l2_loss(x, tr.output);
    scale_in_place(grad, scale);

    const std::size_t steps = x.rows();
    const std::size_t hid = spec.hidden_width;
    const std::size_t out = spec.input_channels;

    // Readout.
    auto& rw = params_.at("readout.weight");
    auto& rb = params_.at("readout.bias");
    Tensor2D upstream(steps, hid);
    const Tensor2D& top = tr.hidden.back();
    for (std::size_t t = 0; t < steps; ++t) {
      const double* g = grad.row(t).data();
      const double* h = top.row(t).data();
      double* dh = upstream.row(t).data();
      for (std::size_t o = 0; o < out; ++o) rb.grad[o] += g[o];
      for (std::size_t j = 0; j < hid; ++j) {
        const double* w = rw.value.data() + j * out;
        double* gw = rw.grad.data() + j * out;
        double acc = 0.0;
        for (std::size_t o = 0; o < out; ++o) {
          gw[o] += h[j] * g[o];
          acc += w[o] * g[o];
        }
        dh[j] = acc;
      }
    }

    // Backpropagation through time, top layer first.
    for (std::size_t l = kModelDepth; l-- > 0;) {
      const Tensor2D& input = l == 0 ? x : tr.hidden[l - 1];
      const Tensor2D& hseq = tr.hidden[l];
      const std::size_t in = input.cols();
      auto& wx = params_.at(rnn_name(l, "input_weight"));
      auto& wh = params_.at(rnn_name(l, "recurrent_weight"));
      auto& b = params_.at(rnn_name(l, "bias"));
      Tensor2D input_grad(steps, in);
      std::vector<double> carry(hid, 0.0), dpre(hid);
      for (std::size_t t = steps; t-- > 0;) {
        const double* h = hseq.row(t).data();
        const double* up = upstream.row(t).data();
        for (std::size_t o = 0; o < hid; ++o) dpre[o] = (up[o] + carry[o]) * (1.0 - h[o] * h[o]);
        for (std::size_t o = 0; o < hid; ++o) b.grad[o] += dpre[o];
        const double* xt = input.row(t).data();
        double* gx = input_grad.row(t).data();
        for (std::size_t i = 0; i < in; ++i) {
          const double* w = wx.value.data() + i * hid;
          double* gw = wx.grad.data() + i * hid;
          double acc = 0.0;
          for (std::size_t o = 0; o < hid; ++o) {
            gw[o] += xt[i] * dpre[o];
            acc += w[o] * dpre[o];
          }
          gx[i] = acc;
        }
        const double* hprev = t > 0 ? hseq.row(t - 1).data() : nullptr;
        for (std::size_t j = 0; j < hid; ++j) {
          const double* w = wh.value.data() + j * hid;
          double* gw = wh.grad.data() + j * hid;
          double acc = 0.0;
          const double hj = hprev ? hprev[j] : 0.0;
          for (std::size_t o = 0; o < hid; ++o) {
            gw[o] += hj * dpre[o];
            acc += w[o] * dpre[o];
          }
          carry[j] = acc;
        }
      }
      upstream = std::move(input_grad);
    }
    return loss;
  }

  ModelSpec spec_;
  ParamStore params_;
};

namespace detail {

inline void fill_uniform(std::vector<double>& v, double bound, Rng& rng) {
  for (auto& x : v) x = uniform(rng, -bound, bound);
}

}  // namespace detail

/// conv(k, Cin->H) + ReLU, conv(k, H->H) + ReLU, conv(k, H->Cin) linear.
/// Weights ~ U[-a, a] with a = sqrt(1 / (k * fan_in)); biases zero.
inline Model build_ncae(const NcaeSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamStore ps = declare_parameters(spec);
  Rng rng(seed);
  for (std::size_t l = 0; l < kModelDepth; ++l) {
    const auto shape = detail::ncae_layer_shape(spec, l);
    detail::fill_uniform(ps.at(detail::conv_name(l, "weight")).value,
                         std::sqrt(1.0 / static_cast<double>(shape.kernel * shape.in_channels)), rng);
  }
  return Model(spec, std::move(ps));
}

/// Three stacked tanh recurrent layers and an affine readout back to Cin,
/// reconstructing the input one step at a time.
inline Model build_baseline(const BaselineSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamStore ps = declare_parameters(spec);
  Rng rng(seed);
  const double hid = static_cast<double>(spec.hidden_width);
  for (std::size_t l = 0; l < kModelDepth; ++l) {
    const double in = static_cast<double>(l == 0 ? spec.input_channels : spec.hidden_width);
    detail::fill_uniform(ps.at(detail::rnn_name(l, "input_weight")).value, std::sqrt(1.0 / in), rng);
    detail::fill_uniform(ps.at(detail::rnn_name(l, "recurrent_weight")).value, std::sqrt(1.0 / hid),
                         rng);
  }
  detail::fill_uniform(ps.at("readout.weight").value, std::sqrt(1.0 / hid), rng);
  return Model(spec, std::move(ps));
}

inline Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  if (const auto* s = std::get_if<NcaeSpec>(&spec)) return build_ncae(*s, seed);
  return build_baseline(std::get<BaselineSpec>(spec), seed);
}

inline Tensor2D ncae_forward(const Model& model, const Tensor2D& x) {
  if (model.architecture() != Architecture::ncae)
    throw InvalidArgument("ncae_forward: model is not an NCAE");
  return model.forward(x);
}

}  // namespace ncae
