#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ncae/error.hpp"

namespace ncae {

/// Row-major T x C matrix: rows are time steps, columns are channels.
template <class T>
class BasicTensor2D {
 public:
  using value_type = T;

  BasicTensor2D() = default;
  BasicTensor2D(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicTensor2D(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw ShapeMismatch("tensor: data size != rows * cols");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(const BasicTensor2D& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  BasicTensor2D slice_rows(std::size_t first, std::size_t count) const {
    BasicTensor2D out(count, cols_);
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_), count * cols_,
                out.data_.begin());
    return out;
  }

  template <class U>
  BasicTensor2D<U> cast() const {
    return BasicTensor2D<U>(rows_, cols_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const BasicTensor2D&, const BasicTensor2D&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Tensor2D = BasicTensor2D<double>;

/// One named parameter tensor with its gradient buffer.
template <class T>
struct BasicParam {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<T> value;
  std::vector<T> grad;

  std::size_t size() const noexcept { return value.size(); }
};

/// Ordered collection of named parameters. Order is significant: it defines
/// the checkpoint payload layout and the optimizer state layout.
template <class T>
class BasicParamStore {
 public:
  using Param = BasicParam<T>;

  Param& add(std::string name, std::vector<std::size_t> shape) {
    if (find(name) != nullptr) throw InvalidArgument("param store: duplicate name " + name);
    const std::size_t n =
        std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    params_.push_back(Param{std::move(name), std::move(shape), std::vector<T>(n, T(0)),
                            std::vector<T>(n, T(0))});
    return params_.back();
  }

  Param* find(const std::string& name) noexcept {
    for (auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }
  const Param* find(const std::string& name) const noexcept {
    for (const auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }

  Param& at(const std::string& name) {
    if (auto* p = find(name)) return *p;
    throw InvalidArgument("param store: no parameter named " + name);
  }
  const Param& at(const std::string& name) const {
    if (const auto* p = find(name)) return *p;
    throw InvalidArgument("param store: no parameter named " + name);
  }

  std::vector<Param>& params() noexcept { return params_; }
  const std::vector<Param>& params() const noexcept { return params_; }

  std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), T(0));
  }

  template <class U>
  BasicParamStore<U> cast() const {
    BasicParamStore<U> out;
    for (const auto& p : params_) {
      auto& q = out.add(p.name, p.shape);
      std::copy(p.value.begin(), p.value.end(), q.value.begin());
      std::copy(p.grad.begin(), p.grad.end(), q.grad.begin());
    }
    return out;
  }

  friend bool operator==(const BasicParamStore& a, const BasicParamStore& b) {
    if (a.params_.size() != b.params_.size()) return false;
    for (std::size_t i = 0; i < a.params_.size(); ++i) {
      const auto& x = a.params_[i];
      const auto& y = b.params_[i];
      if (x.name != y.name || x.shape != y.shape || x.value != y.value) return false;
    }
    return true;
  }

 private:
  std::vector<Param> params_;
};

using Param = BasicParam<double>;
using ParamStore = BasicParamStore<double>;

}  // namespace ncae
