#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "ctxmt/nn/tensor.hpp"

namespace ctxmt::nn {

struct Var {
  std::size_t id = 0;
};

// Contiguous row range of one sequence inside a packed batch.
struct Segment {
  Eigen::Index begin = 0;
  Eigen::Index length = 0;
};

// Reverse-mode tape. Every op appends a node holding its value and, when
// recording, a closure that pushes the node's gradient to its inputs.
template <typename T>
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}

  bool recording() const { return record_; }

  Var constant(Matrix<T> v) { return push(std::move(v), false); }

  // Leaf bound to a parameter tensor; its gradient is added to tensor.grad.
  Var parameter(Tensor<T>& p) {
    Node n;
    n.external = &p.value;
    n.requires_grad = record_;
    nodes_.push_back(std::move(n));
    Var v{nodes_.size() - 1};
    if (record_) {
      nodes_.back().backward = [this, v, &p] { p.ensure_grad() += nodes_[v.id].grad; };
    }
    return v;
  }

  const Matrix<T>& value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.external ? *n.external : n.value;
  }

  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  Matrix<T>& grad(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.size() == 0) {
      const auto& val = value(v);
      n.grad = Matrix<T>::Zero(val.rows(), val.cols());
    }
    return n.grad;
  }

  bool has_grad(Var v) const { return nodes_[v.id].grad.size() > 0; }

  Var push(Matrix<T> value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = record_ && requires_grad;
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
  }

  void on_backward(Var v, std::function<void()> fn) {
    if (nodes_[v.id].requires_grad) nodes_[v.id].backward = std::move(fn);
  }

  // Seeds d(loss)/d(loss) = 1 for a 1x1 node and runs all closures.
  void backward(Var loss) {
    grad(loss).setOnes();
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& n = nodes_[i];
      if (n.requires_grad && n.backward && n.grad.size() > 0) n.backward();
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<T> value;
    const Matrix<T>* external = nullptr;
    Matrix<T> grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  bool record_;
  std::deque<Node> nodes_;
};

}  // namespace ctxmt::nn
