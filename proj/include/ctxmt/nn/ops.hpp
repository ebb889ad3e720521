#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "ctxmt/nn/tape.hpp"

namespace ctxmt::nn::ops {

template <typename T>
bool any_grad(const Tape<T>& t, std::initializer_list<Var> vs) {
  for (auto v : vs)
    if (t.requires_grad(v)) return true;
  return false;
}

// a [m x k] * b [k x n]
template <typename T>
Var matmul(Tape<T>& t, Var a, Var b) {
  Var r = t.push(t.value(a) * t.value(b), any_grad(t, {a, b}));
  t.on_backward(r, [&t, a, b, r] {
    const auto& g = t.grad(r);
    if (t.requires_grad(a)) t.grad(a).noalias() += g * t.value(b).transpose();
    if (t.requires_grad(b)) t.grad(b).noalias() += t.value(a).transpose() * g;
  });
  return r;
}

// a [m x k] * b^T with b [n x k]
template <typename T>
Var matmul_bt(Tape<T>& t, Var a, Var b) {
  Var r = t.push(t.value(a) * t.value(b).transpose(), any_grad(t, {a, b}));
  t.on_backward(r, [&t, a, b, r] {
    const auto& g = t.grad(r);
    if (t.requires_grad(a)) t.grad(a).noalias() += g * t.value(b);
    if (t.requires_grad(b)) t.grad(b).noalias() += g.transpose() * t.value(a);
  });
  return r;
}

template <typename T>
Var add(Tape<T>& t, Var a, Var b) {
  Var r = t.push(t.value(a) + t.value(b), any_grad(t, {a, b}));
  t.on_backward(r, [&t, a, b, r] {
    if (t.requires_grad(a)) t.grad(a) += t.grad(r);
    if (t.requires_grad(b)) t.grad(b) += t.grad(r);
  });
  return r;
}

// Broadcasts a 1 x n bias over the rows of a.
template <typename T>
Var add_row(Tape<T>& t, Var a, Var bias) {
  Matrix<T> out = t.value(a);
  out.rowwise() += t.value(bias).row(0);
  Var r = t.push(std::move(out), any_grad(t, {a, bias}));
  t.on_backward(r, [&t, a, bias, r] {
    if (t.requires_grad(a)) t.grad(a) += t.grad(r);
    if (t.requires_grad(bias)) t.grad(bias).row(0) += t.grad(r).colwise().sum();
  });
  return r;
}

template <typename T>
Var scale(Tape<T>& t, Var a, T s) {
  Var r = t.push(t.value(a) * s, t.requires_grad(a));
  t.on_backward(r, [&t, a, r, s] { t.grad(a) += t.grad(r) * s; });
  return r;
}

template <typename T>
Var relu(Tape<T>& t, Var a) {
  Var r = t.push(t.value(a).cwiseMax(T(0)), t.requires_grad(a));
  t.on_backward(r, [&t, a, r] {
    t.grad(a).array() += (t.value(a).array() > T(0)).select(t.grad(r).array(), T(0));
  });
  return r;
}

// Row gather from an embedding table.
template <typename T>
Var embedding(Tape<T>& t, Var table, std::span<const int> ids) {
  const auto& tab = t.value(table);
  Matrix<T> out(static_cast<Eigen::Index>(ids.size()), tab.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = tab.row(ids[i]);
  Var r = t.push(std::move(out), t.requires_grad(table));
  t.on_backward(r, [&t, table, r, ids = std::vector<int>(ids.begin(), ids.end())] {
    auto& gt = t.grad(table);
    const auto& g = t.grad(r);
    for (std::size_t i = 0; i < ids.size(); ++i) gt.row(ids[i]) += g.row(static_cast<Eigen::Index>(i));
  });
  return r;
}

// Row-wise layer normalization with learned gain and bias.
template <typename T>
Var layer_norm(Tape<T>& t, Var x, Var gain, Var bias, T eps = T(1e-5)) {
  const auto& xv = t.value(x);
  const Eigen::Index n = xv.rows(), d = xv.cols();
  auto xhat = std::make_shared<Matrix<T>>(n, d);
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(n));
  Matrix<T> out(n, d);
  const auto g = t.value(gain).row(0);
  const auto b = t.value(bias).row(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    T mean = xv.row(i).mean();
    T var = (xv.row(i).array() - mean).square().mean();
    T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[static_cast<std::size_t>(i)] = is;
    xhat->row(i) = (xv.row(i).array() - mean) * is;
    out.row(i) = xhat->row(i).cwiseProduct(g) + b;
  }
  Var r = t.push(std::move(out), any_grad(t, {x, gain, bias}));
  t.on_backward(r, [&t, x, gain, bias, r, xhat, inv_std] {
    const auto& gr = t.grad(r);
    if (t.requires_grad(gain)) t.grad(gain).row(0) += gr.cwiseProduct(*xhat).colwise().sum();
    if (t.requires_grad(bias)) t.grad(bias).row(0) += gr.colwise().sum();
    if (t.requires_grad(x)) {
      auto& gx = t.grad(x);
      const auto gv = t.value(gain).row(0);
      const T d = static_cast<T>(xhat->cols());
      for (Eigen::Index i = 0; i < xhat->rows(); ++i) {
        Eigen::Matrix<T, 1, Eigen::Dynamic> dxh = gr.row(i).cwiseProduct(gv);
        T m1 = dxh.sum() / d;
        T m2 = dxh.dot(xhat->row(i)) / d;
        gx.row(i).array() +=
            (*inv_std)[static_cast<std::size_t>(i)] * (dxh.array() - m1 - xhat->row(i).array() * m2);
      }
    }
  });
  return r;
}

// Inverted dropout; identity when rate is 0.
template <typename T>
Var dropout(Tape<T>& t, Var a, double rate, std::mt19937_64& rng) {
  if (rate <= 0) return a;
  const auto& av = t.value(a);
  auto mask = std::make_shared<Matrix<T>>(av.rows(), av.cols());
  const T keep_scale = T(1) / static_cast<T>(1 - rate);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < mask->size(); ++i) mask->data()[i] = u(rng) < rate ? T(0) : keep_scale;
  Var r = t.push(av.cwiseProduct(*mask), t.requires_grad(a));
  t.on_backward(r, [&t, a, r, mask] { t.grad(a) += t.grad(r).cwiseProduct(*mask); });
  return r;
}

// Multi-head scaled dot-product attention over packed sequences. Query
// segment s attends to key segment s; with `causal`, query row i of a segment
// only sees key rows <= i. Keys flagged in `key_masked` are ignored.
template <typename T>
Var attention(Tape<T>& t, Var q, Var k, Var v, std::span<const Segment> q_segments,
              std::span<const Segment> k_segments, int heads, bool causal,
              const std::vector<char>* key_masked = nullptr) {
  const auto& Q = t.value(q);
  const auto& K = t.value(k);
  const auto& V = t.value(v);
  const Eigen::Index d = Q.cols();
  const Eigen::Index dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  Matrix<T> out = Matrix<T>::Zero(Q.rows(), d);
  // One probability block per (segment, head).
  auto probs = std::make_shared<std::vector<Matrix<T>>>();
  probs->reserve(q_segments.size() * static_cast<std::size_t>(heads));
  const T neg_inf = -std::numeric_limits<T>::infinity();

  for (std::size_t s = 0; s < q_segments.size(); ++s) {
    const auto qs = q_segments[s];
    const auto ks = k_segments[s];
    for (int h = 0; h < heads; ++h) {
      const Eigen::Index c0 = h * dh;
      Matrix<T> S = Q.block(qs.begin, c0, qs.length, dh) * K.block(ks.begin, c0, ks.length, dh).transpose();
      S *= scale;
      for (Eigen::Index i = 0; i < qs.length; ++i) {
        T mx = neg_inf;
        for (Eigen::Index j = 0; j < ks.length; ++j) {
          bool masked = (causal && j > i) || (key_masked && (*key_masked)[static_cast<std::size_t>(ks.begin + j)]);
          if (masked) S(i, j) = neg_inf;
          else mx = std::max(mx, S(i, j));
        }
        if (mx == neg_inf) {
          S.row(i).setZero();
          continue;
        }
        T sum = 0;
        for (Eigen::Index j = 0; j < ks.length; ++j) {
          T e = S(i, j) == neg_inf ? T(0) : std::exp(S(i, j) - mx);
          S(i, j) = e;
          sum += e;
        }
        S.row(i) /= sum;
      }
      out.block(qs.begin, c0, qs.length, dh).noalias() = S * V.block(ks.begin, c0, ks.length, dh);
      probs->push_back(std::move(S));
    }
  }

  Var r = t.push(std::move(out), any_grad(t, {q, k, v}));
  t.on_backward(r, [&t, q, k, v, r, heads, scale, probs,
                    qseg = std::vector<Segment>(q_segments.begin(), q_segments.end()),
                    kseg = std::vector<Segment>(k_segments.begin(), k_segments.end())] {
    const auto& G = t.grad(r);
    const auto& Q = t.value(q);
    const auto& K = t.value(k);
    const auto& V = t.value(v);
    const Eigen::Index dh = Q.cols() / heads;
    const bool gq = t.requires_grad(q), gk = t.requires_grad(k), gv = t.requires_grad(v);
    Matrix<T>* dQ = gq ? &t.grad(q) : nullptr;
    Matrix<T>* dK = gk ? &t.grad(k) : nullptr;
    Matrix<T>* dV = gv ? &t.grad(v) : nullptr;
    std::size_t p = 0;
    for (std::size_t s = 0; s < qseg.size(); ++s) {
      const auto qs = qseg[s];
      const auto ks = kseg[s];
      for (int h = 0; h < heads; ++h, ++p) {
        const Eigen::Index c0 = h * dh;
        const Matrix<T>& P = (*probs)[p];
        auto Gs = G.block(qs.begin, c0, qs.length, dh);
        if (dV) dV->block(ks.begin, c0, ks.length, dh).noalias() += P.transpose() * Gs;
        if (!dQ && !dK) continue;
        Matrix<T> dP = Gs * V.block(ks.begin, c0, ks.length, dh).transpose();
        // softmax backward: dS = P * (dP - rowsum(dP * P))
        Eigen::Matrix<T, Eigen::Dynamic, 1> dot = (dP.cwiseProduct(P)).rowwise().sum();
        Matrix<T> dS = P.cwiseProduct(dP - dot.replicate(1, dP.cols()));
        dS *= scale;
        if (dQ) dQ->block(qs.begin, c0, qs.length, dh).noalias() += dS * K.block(ks.begin, c0, ks.length, dh);
        if (dK) dK->block(ks.begin, c0, ks.length, dh).noalias() += dS.transpose() * Q.block(qs.begin, c0, qs.length, dh);
      }
    }
  });
  return r;
}

// Row-wise log-softmax (no tape).
template <typename T>
Matrix<T> log_softmax_rows(const Matrix<T>& logits) {
  Matrix<T> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    T mx = logits.row(i).maxCoeff();
    T lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

// weight * sum_i -log softmax(logits_i)[targets_i], as a 1x1 node.
template <typename T>
Var cross_entropy(Tape<T>& t, Var logits, std::span<const int> targets, T weight) {
  auto logp = std::make_shared<Matrix<T>>(log_softmax_rows(t.value(logits)));
  T total = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) total -= (*logp)(static_cast<Eigen::Index>(i), targets[i]);
  Matrix<T> out(1, 1);
  out(0, 0) = weight * total;
  Var r = t.push(std::move(out), t.requires_grad(logits));
  t.on_backward(r, [&t, logits, r, logp, weight, tg = std::vector<int>(targets.begin(), targets.end())] {
    T g = t.grad(r)(0, 0) * weight;
    auto& gl = t.grad(logits);
    gl.array() += logp->array().exp() * g;
    for (std::size_t i = 0; i < tg.size(); ++i) gl(static_cast<Eigen::Index>(i), tg[i]) -= g;
  });
  return r;
}

}  // namespace ctxmt::nn::ops
