#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ctxmt::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense parameter tensor. One- and two-dimensional shapes are stored as a
// row-major matrix (a vector is a single row), so values() is the flat array.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  Matrix<T> value;
  Matrix<T> grad;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    auto [r, c] = rows_cols(shape);
    value = Matrix<T>::Zero(r, c);
  }

  static std::pair<Eigen::Index, Eigen::Index> rows_cols(const std::vector<std::size_t>& s) {
    if (s.size() == 1) return {1, static_cast<Eigen::Index>(s[0])};
    Eigen::Index cols = static_cast<Eigen::Index>(s.back());
    Eigen::Index rows = 1;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) rows *= static_cast<Eigen::Index>(s[i]);
    return {rows, cols};
  }

  std::size_t size() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }
  std::span<T> values() { return {value.data(), static_cast<std::size_t>(value.size())}; }
  std::span<const T> values() const { return {value.data(), static_cast<std::size_t>(value.size())}; }

  Matrix<T>& ensure_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols())
      grad = Matrix<T>::Zero(value.rows(), value.cols());
    return grad;
  }
  bool has_grad() const { return grad.size() == value.size() && grad.size() > 0; }
  void zero_grad() {
    if (has_grad()) grad.setZero();
  }
};

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

// Ordered parameter collection; order is creation order and is what the
// checkpoint format and initialization walk.
template <typename T>
class ParameterSet {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape) {
    items_.push_back({std::move(name), Tensor<T>(std::move(shape))});
    return items_.size() - 1;
  }

  Tensor<T>& operator[](std::size_t i) { return items_[i].tensor; }
  const Tensor<T>& operator[](std::size_t i) const { return items_[i].tensor; }
  std::vector<NamedTensor<T>>& items() { return items_; }
  const std::vector<NamedTensor<T>>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }

  std::size_t num_values() const {
    std::size_t n = 0;
    for (const auto& it : items_) n += it.tensor.size();
    return n;
  }

  void zero_grad() {
    for (auto& it : items_) it.tensor.zero_grad();
  }

 private:
  std::vector<NamedTensor<T>> items_;
};

}  // namespace ctxmt::nn
