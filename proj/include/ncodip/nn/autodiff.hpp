// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ncodip contributors

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ncodip/error.hpp"

// Reverse-mode automatic differentiation over dense Eigen matrices with a
// dynamically built tape. Scalar type is a template parameter: the model
// trains in float and the gradient-check suites instantiate double.
namespace ncodip::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <typename S>
struct Node {
  Mat<S> value;
  Mat<S> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<S>>> parents;
  // Pushes this node's accumulated gradient into its parents. Captures parent
  // shared_ptrs (no self-capture, so no ownership cycle).
  std::function<void(const Mat<S>&)> backprop;

  void accumulate(const Mat<S>& g) {
    if (grad.size() == 0) grad = Mat<S>::Zero(value.rows(), value.cols());
    grad += g;
  }
};

template <typename S>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<S>> n) : node_(std::move(n)) {}

  static Var leaf(Mat<S> v, bool requires_grad = false) {
    auto n = std::make_shared<Node<S>>();
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
  }
  static Var constant(Mat<S> v) { return leaf(std::move(v), false); }
  static Var scalar(S v) {
    Mat<S> m(1, 1);
    m(0, 0) = v;
    return constant(std::move(m));
  }

  bool defined() const { return node_ != nullptr; }
  const Mat<S>& value() const { return node_->value; }
  Mat<S>& value() { return node_->value; }
  const Mat<S>& grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() != 0; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void zero_grad() { node_->grad.resize(0, 0); }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  S item() const {
    if (rows() != 1 || cols() != 1) throw Error("item() on non-scalar");
    return node_->value(0, 0);
  }
  const std::shared_ptr<Node<S>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<S>> node_;
};

namespace detail {

template <typename S>
Var<S> make_op(Mat<S> value, std::vector<Var<S>> parents,
               std::function<void(const Mat<S>&)> backprop) {
  auto n = std::make_shared<Node<S>>();
  n->value = std::move(value);
  for (const auto& p : parents) {
    n->parents.push_back(p.node());
    if (p.node()->requires_grad) n->requires_grad = true;
  }
  if (n->requires_grad) n->backprop = std::move(backprop);
  return Var<S>(std::move(n));
}

template <typename S>
void check_same_shape(const Var<S>& a, const Var<S>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(std::string(op) + ": shape mismatch (" +
                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                " vs " + std::to_string(b.rows()) + "x" +
                std::to_string(b.cols()) + ")");
  }
}

}  // namespace detail

// --- arithmetic ---------------------------------------------------------

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  detail::check_same_shape(a, b, "add");
  auto an = a.node(), bn = b.node();
  return detail::make_op<S>(a.value() + b.value(), {a, b},
                            [an, bn](const Mat<S>& g) {
                              if (an->requires_grad) an->accumulate(g);
                              if (bn->requires_grad) bn->accumulate(g);
                            });
}

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  detail::check_same_shape(a, b, "sub");
  auto an = a.node(), bn = b.node();
  return detail::make_op<S>(a.value() - b.value(), {a, b},
                            [an, bn](const Mat<S>& g) {
                              if (an->requires_grad) an->accumulate(g);
                              if (bn->requires_grad) bn->accumulate(Mat<S>(-g));
                            });
}

// Elementwise product.
template <typename S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  detail::check_same_shape(a, b, "mul");
  auto an = a.node(), bn = b.node();
  Mat<S> av = a.value(), bv = b.value();
  return detail::make_op<S>(
      a.value().cwiseProduct(b.value()), {a, b},
      [an, bn, av, bv](const Mat<S>& g) {
        if (an->requires_grad) an->accumulate(g.cwiseProduct(bv));
        if (bn->requires_grad) bn->accumulate(g.cwiseProduct(av));
      });
}

template <typename S>
Var<S> scale(const Var<S>& a, S c) {
  auto an = a.node();
  return detail::make_op<S>(a.value() * c, {a}, [an, c](const Mat<S>& g) {
    if (an->requires_grad) an->accumulate(Mat<S>(g * c));
  });
}

template <typename S>
Var<S> neg(const Var<S>& a) {
  return scale(a, S(-1));
}

template <typename S>
Var<S> add_const(const Var<S>& a, S c) {
  auto an = a.node();
  return detail::make_op<S>(Mat<S>(a.value().array() + c), {a},
                            [an](const Mat<S>& g) {
                              if (an->requires_grad) an->accumulate(g);
                            });
}

// C = A * B
template <typename S>
Var<S> matmul(const Var<S>& a, const Var<S>& b) {
  if (a.cols() != b.rows()) {
    throw Error("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                " vs " + std::to_string(b.rows()) + ")");
  }
  auto an = a.node(), bn = b.node();
  Mat<S> av = a.value(), bv = b.value();
  return detail::make_op<S>(a.value() * b.value(), {a, b},
                            [an, bn, av, bv](const Mat<S>& g) {
                              if (an->requires_grad)
                                an->accumulate(Mat<S>(g * bv.transpose()));
                              if (bn->requires_grad)
                                bn->accumulate(Mat<S>(av.transpose() * g));
                            });
}

// C = A * B^T
template <typename S>
Var<S> matmul_nt(const Var<S>& a, const Var<S>& b) {
  if (a.cols() != b.cols()) {
    throw Error("matmul_nt: inner dimensions differ");
  }
  auto an = a.node(), bn = b.node();
  Mat<S> av = a.value(), bv = b.value();
  return detail::make_op<S>(a.value() * b.value().transpose(), {a, b},
                            [an, bn, av, bv](const Mat<S>& g) {
                              if (an->requires_grad)
                                an->accumulate(Mat<S>(g * bv));
                              if (bn->requires_grad)
                                bn->accumulate(Mat<S>(g.transpose() * av));
                            });
}

// m + v broadcast over rows (v is 1 x cols).
template <typename S>
Var<S> add_rowvec(const Var<S>& m, const Var<S>& v) {
  if (v.rows() != 1 || v.cols() != m.cols()) {
    throw Error("add_rowvec: bias shape mismatch");
  }
  auto mn = m.node(), vn = v.node();
  Mat<S> out = m.value();
  out.rowwise() += Eigen::RowVector<S, Eigen::Dynamic>(v.value().row(0));
  return detail::make_op<S>(std::move(out), {m, v},
                            [mn, vn](const Mat<S>& g) {
                              if (mn->requires_grad) mn->accumulate(g);
                              if (vn->requires_grad)
                                vn->accumulate(Mat<S>(g.colwise().sum()));
                            });
}

// --- elementwise nonlinearities ------------------------------------------

template <typename S>
Var<S> relu(const Var<S>& a) {
  auto an = a.node();
  Mat<S> av = a.value();
  return detail::make_op<S>(
      Mat<S>(av.array().max(S(0))), {a}, [an, av](const Mat<S>& g) {
        if (!an->requires_grad) return;
        Mat<S> mask = (av.array() > S(0)).template cast<S>();
        an->accumulate(g.cwiseProduct(mask));
      });
}

template <typename S>
Var<S> elu(const Var<S>& a) {
  auto an = a.node();
  Mat<S> av = a.value();
  Mat<S> out = av.unaryExpr(
      [](S x) { return x > S(0) ? x : S(std::expm1(double(x))); });
  return detail::make_op<S>(std::move(out), {a}, [an, av](const Mat<S>& g) {
    if (!an->requires_grad) return;
    Mat<S> d = av.unaryExpr(
        [](S x) { return x > S(0) ? S(1) : S(std::exp(double(x))); });
    an->accumulate(g.cwiseProduct(d));
  });
}

template <typename S>
Var<S> gelu(const Var<S>& a) {
  auto an = a.node();
  Mat<S> av = a.value();
  auto phi = [](double x) { return 0.5 * (1.0 + std::erf(x / 1.4142135623730951)); };
  Mat<S> out = av.unaryExpr([&](S x) { return S(double(x) * phi(double(x))); });
  return detail::make_op<S>(std::move(out), {a}, [an, av, phi](const Mat<S>& g) {
    if (!an->requires_grad) return;
    Mat<S> d = av.unaryExpr([&](S x) {
      double xd = double(x);
      double pdf = std::exp(-0.5 * xd * xd) / 2.5066282746310002;  // sqrt(2*pi)
      return S(phi(xd) + xd * pdf);
    });
    an->accumulate(g.cwiseProduct(d));
  });
}

template <typename S>
Var<S> sigmoid(const Var<S>& a) {
  auto an = a.node();
  Mat<S> out = a.value().unaryExpr(
      [](S x) { return S(1.0 / (1.0 + std::exp(-double(x)))); });
  Mat<S> sv = out;
  return detail::make_op<S>(std::move(out), {a}, [an, sv](const Mat<S>& g) {
    if (!an->requires_grad) return;
    Mat<S> d = sv.array() * (S(1) - sv.array());
    an->accumulate(g.cwiseProduct(d));
  });
}

template <typename S>
Var<S> tanh_v(const Var<S>& a) {
  auto an = a.node();
  Mat<S> out = a.value().unaryExpr([](S x) { return S(std::tanh(double(x))); });
  Mat<S> tv = out;
  return detail::make_op<S>(std::move(out), {a}, [an, tv](const Mat<S>& g) {
    if (!an->requires_grad) return;
    Mat<S> d = S(1) - tv.array().square();
    an->accumulate(g.cwiseProduct(d));
  });
}

template <typename S>
Var<S> log_v(const Var<S>& a) {
  auto an = a.node();
  Mat<S> av = a.value();
  return detail::make_op<S>(Mat<S>(av.array().log()), {a},
                            [an, av](const Mat<S>& g) {
                              if (!an->requires_grad) return;
                              an->accumulate(
                                  Mat<S>(g.array() / av.array()));
                            });
}

// x^p with constant exponent. p == 0 is the constant 1 with zero gradient,
// so the focusing term vanishes cleanly from loss formulas.
template <typename S>
Var<S> pow_const(const Var<S>& a, S p) {
  auto an = a.node();
  Mat<S> av = a.value();
  if (p == S(0)) {
    return detail::make_op<S>(Mat<S>::Ones(a.rows(), a.cols()), {a},
                              [](const Mat<S>&) {});
  }
  Mat<S> out = av.unaryExpr([p](S x) { return S(std::pow(double(x), double(p))); });
  return detail::make_op<S>(std::move(out), {a}, [an, av, p](const Mat<S>& g) {
    if (!an->requires_grad) return;
    Mat<S> d = av.unaryExpr(
        [p](S x) { return S(double(p) * std::pow(double(x), double(p) - 1.0)); });
    an->accumulate(g.cwiseProduct(d));
  });
}

// Clamp with pass-through gradient strictly inside the interval.
template <typename S>
Var<S> clamp(const Var<S>& a, S lo, S hi) {
  auto an = a.node();
  Mat<S> av = a.value();
  return detail::make_op<S>(
      Mat<S>(av.array().max(lo).min(hi)), {a}, [an, av, lo, hi](const Mat<S>& g) {
        if (!an->requires_grad) return;
        Mat<S> mask = ((av.array() >= lo) && (av.array() <= hi)).template cast<S>();
        an->accumulate(g.cwiseProduct(mask));
      });
}

// --- reductions and reshapes ----------------------------------------------

template <typename S>
Var<S> sum_all(const Var<S>& a) {
  auto an = a.node();
  Eigen::Index r = a.rows(), c = a.cols();
  Mat<S> out(1, 1);
  out(0, 0) = a.value().sum();
  return detail::make_op<S>(std::move(out), {a}, [an, r, c](const Mat<S>& g) {
    if (!an->requires_grad) return;
    an->accumulate(Mat<S>(Mat<S>::Constant(r, c, g(0, 0))));
  });
}

template <typename S>
Var<S> mean_rows(const Var<S>& a) {
  auto an = a.node();
  Eigen::Index r = a.rows();
  Mat<S> out = a.value().colwise().mean();
  return detail::make_op<S>(std::move(out), {a}, [an, r](const Mat<S>& g) {
    if (!an->requires_grad) return;
    Mat<S> d(r, g.cols());
    d.rowwise() = Eigen::RowVector<S, Eigen::Dynamic>(g.row(0)) / S(r);
    an->accumulate(d);
  });
}

template <typename S>
Var<S> slice_rows(const Var<S>& a, Eigen::Index start, Eigen::Index len) {
  if (start < 0 || len < 0 || start + len > a.rows()) {
    throw Error("slice_rows: out of range");
  }
  auto an = a.node();
  Eigen::Index r = a.rows(), c = a.cols();
  return detail::make_op<S>(Mat<S>(a.value().middleRows(start, len)), {a},
                            [an, start, len, r, c](const Mat<S>& g) {
                              if (!an->requires_grad) return;
                              Mat<S> d = Mat<S>::Zero(r, c);
                              d.middleRows(start, len) = g;
                              an->accumulate(d);
                            });
}

template <typename S>
Var<S> slice_cols(const Var<S>& a, Eigen::Index start, Eigen::Index len) {
  if (start < 0 || len < 0 || start + len > a.cols()) {
    throw Error("slice_cols: out of range");
  }
  auto an = a.node();
  Eigen::Index r = a.rows(), c = a.cols();
  return detail::make_op<S>(Mat<S>(a.value().middleCols(start, len)), {a},
                            [an, start, len, r, c](const Mat<S>& g) {
                              if (!an->requires_grad) return;
                              Mat<S> d = Mat<S>::Zero(r, c);
                              d.middleCols(start, len) = g;
                              an->accumulate(d);
                            });
}

template <typename S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw Error("concat_cols: empty input");
  Eigen::Index r = parts[0].rows();
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) throw Error("concat_cols: row count mismatch");
    total += p.cols();
  }
  Mat<S> out(r, total);
  Eigen::Index at = 0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> spans;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    spans.emplace_back(at, p.cols());
    at += p.cols();
  }
  std::vector<std::shared_ptr<Node<S>>> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  return detail::make_op<S>(std::move(out), parts,
                            [nodes, spans](const Mat<S>& g) {
                              for (std::size_t i = 0; i < nodes.size(); ++i) {
                                if (!nodes[i]->requires_grad) continue;
                                nodes[i]->accumulate(
                                    Mat<S>(g.middleCols(spans[i].first,
                                                        spans[i].second)));
                              }
                            });
}

// Rows of `table` selected by index, in order; backward scatter-adds.
template <typename S>
Var<S> gather_rows(const Var<S>& table, const std::vector<int>& indices) {
  auto tn = table.node();
  Eigen::Index r = table.rows(), c = table.cols();
  Mat<S> out(static_cast<Eigen::Index>(indices.size()), c);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= r) throw Error("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(indices[i]);
  }
  return detail::make_op<S>(std::move(out), {table},
                            [tn, indices, r, c](const Mat<S>& g) {
                              if (!tn->requires_grad) return;
                              Mat<S> d = Mat<S>::Zero(r, c);
                              for (std::size_t i = 0; i < indices.size(); ++i) {
                                d.row(indices[i]) +=
                                    g.row(static_cast<Eigen::Index>(i));
                              }
                              tn->accumulate(d);
                            });
}

// --- structured ops --------------------------------------------------------

// Row-wise layer normalization with learnable gain/shift (1 x d each).
template <typename S>
Var<S> layer_norm(const Var<S>& x, const Var<S>& gain, const Var<S>& shift,
                  S eps = S(1e-5)) {
  if (gain.rows() != 1 || gain.cols() != x.cols() || shift.rows() != 1 ||
      shift.cols() != x.cols()) {
    throw Error("layer_norm: gain/shift must be 1 x d");
  }
  auto xn = x.node(), gn = gain.node(), sn = shift.node();
  const Eigen::Index r = x.rows(), d = x.cols();
  Mat<S> xhat(r, d);
  Eigen::Matrix<S, Eigen::Dynamic, 1> sigma(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    S mu = x.value().row(i).mean();
    auto centered = (x.value().row(i).array() - mu).eval();
    S var = centered.square().mean();
    sigma(i) = std::sqrt(double(var + eps));
    xhat.row(i) = centered / sigma(i);
  }
  Mat<S> out(r, d);
  for (Eigen::Index i = 0; i < r; ++i) {
    out.row(i) = xhat.row(i).cwiseProduct(gain.value().row(0)) + shift.value().row(0);
  }
  Mat<S> gv = gain.value();
  return detail::make_op<S>(
      std::move(out), {x, gain, shift},
      [xn, gn, sn, xhat, sigma, gv, r, d](const Mat<S>& g) {
        if (gn->requires_grad) {
          Mat<S> dg = (g.array() * xhat.array()).colwise().sum();
          gn->accumulate(dg);
        }
        if (sn->requires_grad) {
          sn->accumulate(Mat<S>(g.colwise().sum()));
        }
        if (xn->requires_grad) {
          Mat<S> dx(r, d);
          for (Eigen::Index i = 0; i < r; ++i) {
            auto dxhat = (g.row(i).array() * gv.row(0).array()).eval();
            S m1 = dxhat.mean();
            S m2 = (dxhat * xhat.row(i).array()).mean();
            dx.row(i) =
                ((dxhat - m1 - xhat.row(i).array() * m2) / sigma(i)).matrix();
          }
          xn->accumulate(dx);
        }
      });
}

// Row-wise softmax with max-shift for stability.
template <typename S>
Var<S> softmax_rows(const Var<S>& x) {
  auto xn = x.node();
  const Eigen::Index r = x.rows(), c = x.cols();
  Mat<S> out(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    S mx = x.value().row(i).maxCoeff();
    auto e = (x.value().row(i).array() - mx).exp().eval();
    out.row(i) = e / e.sum();
  }
  Mat<S> yv = out;
  return detail::make_op<S>(std::move(out), {x}, [xn, yv, r, c](const Mat<S>& g) {
    if (!xn->requires_grad) return;
    Mat<S> dx(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      S dot = g.row(i).cwiseProduct(yv.row(i)).sum();
      dx.row(i) = yv.row(i).cwiseProduct(
          (g.row(i).array() - dot).matrix());
    }
    xn->accumulate(dx);
  });
}

// --- scalar helpers (1x1 vars) ---------------------------------------------

template <typename S>
Var<S> dot(const Var<S>& a, const Var<S>& b) {
  return sum_all(mul(a, b));
}

// Elementwise a / b for same-shape vars (b must be nonzero).
template <typename S>
Var<S> cdiv(const Var<S>& a, const Var<S>& b) {
  detail::check_same_shape(a, b, "cdiv");
  auto an = a.node(), bn = b.node();
  Mat<S> av = a.value(), bv = b.value();
  return detail::make_op<S>(
      Mat<S>(av.array() / bv.array()), {a, b}, [an, bn, av, bv](const Mat<S>& g) {
        if (an->requires_grad) an->accumulate(Mat<S>(g.array() / bv.array()));
        if (bn->requires_grad)
          bn->accumulate(Mat<S>(-g.array() * av.array() / bv.array().square()));
      });
}

template <typename S>
Var<S> sqrt_v(const Var<S>& a) {
  auto an = a.node();
  Mat<S> out = a.value().array().sqrt();
  Mat<S> sv = out;
  return detail::make_op<S>(std::move(out), {a}, [an, sv](const Mat<S>& g) {
    if (!an->requires_grad) return;
    an->accumulate(Mat<S>(g.array() / (S(2) * sv.array())));
  });
}

// cos(a, b) for two 1 x d rows.
template <typename S>
Var<S> cosine(const Var<S>& a, const Var<S>& b) {
  Var<S> num = dot(a, b);
  Var<S> den = mul(sqrt_v(dot(a, a)), sqrt_v(dot(b, b)));
  return cdiv(num, den);
}

// --- backward pass ----------------------------------------------------------

// Accumulates gradients of a scalar root into every reachable leaf with
// requires_grad. Iterative topological order (graphs get deep).
template <typename S>
void backward(const Var<S>& root) {
  if (root.rows() != 1 || root.cols() != 1) {
    throw Error("backward: root must be a scalar");
  }
  std::vector<Node<S>*> order;
  std::unordered_set<Node<S>*> seen;
  struct Frame {
    Node<S>* n;
    std::size_t next_parent;
  };
  std::vector<Frame> stack{{root.node().get(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.n->parents.size()) {
      Node<S>* p = f.n->parents[f.next_parent++].get();
      if (p->requires_grad && seen.insert(p).second) {
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }
  // order is post-order: parents before children; walk in reverse.
  Mat<S> seed(1, 1);
  seed(0, 0) = S(1);
  root.node()->accumulate(seed);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<S>* n = *it;
    if (n->backprop && n->grad.size() != 0) n->backprop(n->grad);
  }
}

}  // namespace ncodip::nn
