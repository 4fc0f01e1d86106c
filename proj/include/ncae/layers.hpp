#pragma once

// Fixed layer set with exact gradients: same-padded 1-D convolution, ReLU,
// tanh recurrent cell and the Euclidean reconstruction loss.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ncae/error.hpp"
#include "ncae/tensor.hpp"

namespace ncae {

// Convolution weights are laid out [tap][in_channel][out_channel].
struct ConvShape {
  std::size_t kernel = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;

  std::size_t weight_count() const noexcept { return kernel * in_channels * out_channels; }
};

namespace detail {

inline void check_conv_shapes(const ConvShape& s, std::size_t input_cols, std::size_t weights,
                              std::size_t bias) {
  if (s.kernel % 2 == 0)
    throw InvalidArgument("conv1d: kernel size " + std::to_string(s.kernel) + " is even");
  if (input_cols != s.in_channels)
    throw ShapeMismatch("conv1d: input has " + std::to_string(input_cols) + " channels, expected " +
                        std::to_string(s.in_channels));
  if (weights != s.weight_count()) throw ShapeMismatch("conv1d: weight count mismatch");
  if (bias != s.out_channels) throw ShapeMismatch("conv1d: bias length mismatch");
}

}  // namespace detail

/// Stride-1 convolution along time with zero same-padding, so the output has
/// exactly as many time steps as the input.
///   out[t,o] = bias[o] + sum_{d,i} w[d,i,o] * in[t + d - (k-1)/2, i]
template <class T>
BasicTensor2D<T> conv1d_forward(const BasicTensor2D<T>& input, std::span<const T> weights,
                                std::span<const T> bias, const ConvShape& shape) {
  detail::check_conv_shapes(shape, input.cols(), weights.size(), bias.size());
  const std::size_t steps = input.rows();
  const std::size_t cin = shape.in_channels;
  const std::size_t cout = shape.out_channels;
  const auto half = static_cast<std::ptrdiff_t>(shape.kernel / 2);
  BasicTensor2D<T> out(steps, cout);
  for (std::size_t t = 0; t < steps; ++t) {
    T* dst = out.row(t).data();
    for (std::size_t o = 0; o < cout; ++o) dst[o] = bias[o];
    for (std::size_t d = 0; d < shape.kernel; ++d) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + d) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(steps)) continue;
      const T* x = input.row(static_cast<std::size_t>(src)).data();
      for (std::size_t i = 0; i < cin; ++i) {
        const T xi = x[i];
        const T* w = weights.data() + (d * cin + i) * cout;
        for (std::size_t o = 0; o < cout; ++o) dst[o] += xi * w[o];
      }
    }
  }
  return out;
}

/// Adds the gradients of conv1d_forward into weight_grad / bias_grad and, when
/// input_grad is non-null, writes the gradient with respect to the input.
template <class T>
void conv1d_backward_accumulate(const BasicTensor2D<T>& input, std::span<const T> weights,
                                const ConvShape& shape, const BasicTensor2D<T>& upstream,
                                std::span<T> weight_grad, std::span<T> bias_grad,
                                BasicTensor2D<T>* input_grad) {
  detail::check_conv_shapes(shape, input.cols(), weights.size(), bias_grad.size());
  if (weight_grad.size() != weights.size()) throw ShapeMismatch("conv1d: weight grad size");
  if (upstream.rows() != input.rows() || upstream.cols() != shape.out_channels)
    throw ShapeMismatch("conv1d: upstream gradient shape mismatch");
  const std::size_t steps = input.rows();
  const std::size_t cin = shape.in_channels;
  const std::size_t cout = shape.out_channels;
  const auto half = static_cast<std::ptrdiff_t>(shape.kernel / 2);
  if (input_grad != nullptr) *input_grad = BasicTensor2D<T>(steps, cin);

  for (std::size_t t = 0; t < steps; ++t) {
    const T* up = upstream.row(t).data();
    for (std::size_t o = 0; o < cout; ++o) bias_grad[o] += up[o];
    for (std::size_t d = 0; d < shape.kernel; ++d) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + d) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(steps)) continue;
      const T* x = input.row(static_cast<std::size_t>(src)).data();
      T* gx = input_grad ? input_grad->row(static_cast<std::size_t>(src)).data() : nullptr;
      for (std::size_t i = 0; i < cin; ++i) {
        const T* w = weights.data() + (d * cin + i) * cout;
        T* gw = weight_grad.data() + (d * cin + i) * cout;
        const T xi = x[i];
        T acc = T(0);
        for (std::size_t o = 0; o < cout; ++o) {
          gw[o] += xi * up[o];
          acc += w[o] * up[o];
        }
        if (gx) gx[i] += acc;
      }
    }
  }
}

template <class T>
struct ConvGrads {
  BasicTensor2D<T> input_grad;
  std::vector<T> weight_grad;
  std::vector<T> bias_grad;
};

template <class T>
ConvGrads<T> conv1d_backward(const BasicTensor2D<T>& input, std::span<const T> weights,
                             const ConvShape& shape, const BasicTensor2D<T>& upstream) {
  ConvGrads<T> g{{}, std::vector<T>(weights.size(), T(0)),
                 std::vector<T>(shape.out_channels, T(0))};
  conv1d_backward_accumulate<T>(input, weights, shape, upstream, g.weight_grad, g.bias_grad,
                                &g.input_grad);
  return g;
}

template <class T>
BasicTensor2D<T> relu(BasicTensor2D<T> x) {
  for (auto& v : x.data()) v = v > T(0) ? v : T(0);
  return x;
}

// Subgradient at exactly zero is taken as 0.
template <class T>
BasicTensor2D<T> relu_backward(const BasicTensor2D<T>& x, BasicTensor2D<T> upstream) {
  if (!x.same_shape(upstream)) throw ShapeMismatch("relu_backward: shape mismatch");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x.data()[i] > T(0))) upstream.data()[i] = T(0);
  return upstream;
}

template <class T>
struct LossAndGrad {
  T loss;
  BasicTensor2D<T> grad;  // d loss / d reconstruction
};

/// Euclidean distance ||X - Xhat||_2 over every entry, plus its gradient with
/// respect to Xhat. At zero distance the gradient is defined as zero.
template <class T>
T l2_distance(const BasicTensor2D<T>& x, const BasicTensor2D<T>& xhat) {
  if (!x.same_shape(xhat)) throw ShapeMismatch("l2 loss: shape mismatch");
  T acc = T(0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T d = x.data()[i] - xhat.data()[i];
    acc += d * d;
  }
  using std::sqrt;
  return sqrt(acc);
}

template <class T>
LossAndGrad<T> l2_loss(const BasicTensor2D<T>& x, const BasicTensor2D<T>& xhat) {
  const T loss = l2_distance(x, xhat);
  BasicTensor2D<T> grad(xhat.rows(), xhat.cols());
  if (loss > T(0)) {
    for (std::size_t i = 0; i < x.size(); ++i)
      grad.data()[i] = (xhat.data()[i] - x.data()[i]) / loss;
  }
  return {loss, std::move(grad)};
}

/// Parameters of one tanh recurrent layer. input_weights is [in][hidden],
/// recurrent_weights is [hidden][hidden].
template <class T>
struct RecurrentCellView {
  std::span<const T> input_weights;
  std::span<const T> recurrent_weights;
  std::span<const T> bias;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
};

/// h_t = tanh(Wx x_t + Wh h_prev + b)
template <class T>
std::vector<T> recurrent_cell_forward(std::span<const T> x, std::span<const T> h_prev,
                                      const RecurrentCellView<T>& cell) {
  const std::size_t in = cell.input_size;
  const std::size_t hid = cell.hidden_size;
  if (x.size() != in || h_prev.size() != hid || cell.input_weights.size() != in * hid ||
      cell.recurrent_weights.size() != hid * hid || cell.bias.size() != hid)
    throw ShapeMismatch("recurrent cell: dimension mismatch");
  std::vector<T> pre(cell.bias.begin(), cell.bias.end());
  for (std::size_t i = 0; i < in; ++i) {
    const T xi = x[i];
    const T* w = cell.input_weights.data() + i * hid;
    for (std::size_t o = 0; o < hid; ++o) pre[o] += xi * w[o];
  }
  for (std::size_t j = 0; j < hid; ++j) {
    const T hj = h_prev[j];
    const T* w = cell.recurrent_weights.data() + j * hid;
    for (std::size_t o = 0; o < hid; ++o) pre[o] += hj * w[o];
  }
  using std::tanh;
  for (auto& v : pre) v = tanh(v);
  return pre;
}

}  // namespace ncae
