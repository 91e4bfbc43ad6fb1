// Copyright 2026 The attnlab Authors
// Tensor ops and the reverse-mode sweep.
//
// Licensed under the Apache License, Version 2.0

#include "attnlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace attnlab {

using detail::Node;
using detail::NodePtr;

namespace {

Index shape_product(const std::vector<Index>& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d <= 0) throw ShapeError("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<Index>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

NodePtr make_leaf_node(std::vector<Index> shape, Vec values, bool requires_grad) {
  if (shape_product(shape) != values.size()) {
    throw ShapeError("shape " + shape_str(shape) + " does not match buffer of " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  node->seq = Node::next_seq();
  return node;
}

// Builds an operation node. The inputs/rule are recorded only when some
// input participates in a gradient, so frozen-parameter evaluation builds
// plain value nodes.
Tensor make_op(std::vector<Index> shape, Vec values,
               std::vector<Tensor> inputs, std::function<void(Node&)> rule) {
  bool needs_grad = false;
  for (const Tensor& t : inputs) needs_grad = needs_grad || t.requires_grad();
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = needs_grad;
  if (needs_grad) {
    node->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) node->inputs.push_back(t.node_ptr());
    node->backward_rule = std::move(rule);
  }
  node->seq = Node::next_seq();
  return Tensor(std::move(node));
}

void require_defined(const Tensor& t, const char* what) {
  if (!t.defined()) throw ContractError(std::string(what) + ": undefined tensor");
}

void require_2d(const Tensor& t, const char* what) {
  require_defined(t, what);
  if (t.ndim() != 2) {
    throw ShapeError(std::string(what) + ": expected 2-D tensor, got " +
                     shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  require_defined(a, what);
  require_defined(b, what);
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
}

ConstMatMap mat_of(const Node* n) {
  return ConstMatMap(n->values.data(), n->shape[0], n->shape[1]);
}

MatMap grad_mat_of(Node* n) {
  return MatMap(n->ensure_grad().data(), n->shape[0], n->shape[1]);
}

}  // namespace

// ---- Tensor --------------------------------------------------------------

Tensor Tensor::from_values(std::vector<Index> shape, Vec values, bool requires_grad) {
  return Tensor(make_leaf_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::zeros(std::vector<Index> shape, bool requires_grad) {
  Index n = shape_product(shape);
  return Tensor(make_leaf_node(std::move(shape), Vec::Zero(n), requires_grad));
}

Tensor Tensor::constant(std::vector<Index> shape, Scalar value) {
  Index n = shape_product(shape);
  return Tensor(make_leaf_node(std::move(shape), Vec::Constant(n, value), false));
}

Tensor Tensor::scalar(Scalar value) {
  return Tensor(make_leaf_node({1}, Vec::Constant(1, value), false));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<Scalar>> rows,
                      bool requires_grad) {
  const Index n = static_cast<Index>(rows.size());
  if (n == 0) throw ShapeError("matrix literal needs at least one row");
  const Index m = static_cast<Index>(rows.begin()->size());
  Vec values(n * m);
  Index at = 0;
  for (const auto& row : rows) {
    if (static_cast<Index>(row.size()) != m) {
      throw ShapeError("matrix literal rows have unequal lengths");
    }
    for (Scalar v : row) values[at++] = v;
  }
  return from_values({n, m}, std::move(values), requires_grad);
}

Tensor Tensor::vector(std::initializer_list<Scalar> entries, bool requires_grad) {
  Vec values(static_cast<Index>(entries.size()));
  Index at = 0;
  for (Scalar v : entries) values[at++] = v;
  return from_values({static_cast<Index>(entries.size())}, std::move(values),
                     requires_grad);
}

const std::vector<Index>& Tensor::shape() const {
  if (!node_) throw ContractError("shape(): undefined tensor");
  return node_->shape;
}

Index Tensor::size() const { return node_ ? node_->values.size() : 0; }

Index Tensor::rows() const {
  require_2d(*this, "rows()");
  return node_->shape[0];
}

Index Tensor::cols() const {
  require_2d(*this, "cols()");
  return node_->shape[1];
}

const Vec& Tensor::values() const {
  if (!node_) throw ContractError("values(): undefined tensor");
  return node_->values;
}

Vec& Tensor::mutable_values() {
  if (!node_) throw ContractError("mutable_values(): undefined tensor");
  return node_->values;
}

Scalar Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item(): tensor has " + std::to_string(size()) + " elements");
  }
  return node_->values[0];
}

ConstMatMap Tensor::matrix_view() const {
  require_2d(*this, "matrix_view()");
  return ConstMatMap(node_->values.data(), node_->shape[0], node_->shape[1]);
}

MatMap Tensor::mutable_matrix_view() {
  require_2d(*this, "mutable_matrix_view()");
  return MatMap(node_->values.data(), node_->shape[0], node_->shape[1]);
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool requires_grad) {
  if (!node_) throw ContractError("set_requires_grad(): undefined tensor");
  if (!node_->inputs.empty()) {
    throw ContractError("set_requires_grad(): only leaves may change grad mode");
  }
  node_->requires_grad = requires_grad;
}

bool Tensor::is_leaf() const { return node_ && node_->inputs.empty(); }

bool Tensor::has_grad() const { return node_ && node_->grad.size() > 0; }

const Vec& Tensor::grad() const {
  if (!has_grad()) throw ContractError("grad(): no gradient accumulated");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_ && node_->grad.size() > 0) node_->grad.setZero();
}

Tensor Tensor::detach() const {
  if (!node_) return Tensor();
  return from_values(node_->shape, node_->values, false);
}

// ---- Tape ----------------------------------------------------------------

Tape::Tape(const Tensor& root) : root_(root.node_ptr()) {
  if (!root_) throw ContractError("backward: undefined loss tensor");
  if (root_->size() != 1) {
    throw ContractError("backward: loss must be scalar, got " +
                        shape_str(root_->shape));
  }
  if (!root_->requires_grad) {
    throw ContractError("backward: loss is detached from every trainable leaf");
  }
  // Collect the reachable graph and order it.
  std::unordered_set<const Node*> seen;
  std::vector<Node*> stack{root_.get()};
  seen.insert(root_.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order_.push_back(n);
    for (const NodePtr& in : n->inputs) {
      if (in->seq >= n->seq) {
        throw Error("tape order violated: input recorded after its consumer");
      }
      if (in->requires_grad && seen.insert(in.get()).second) {
        stack.push_back(in.get());
      }
    }
  }
  std::sort(order_.begin(), order_.end(),
            [](const Node* a, const Node* b) { return a->seq > b->seq; });
}

void Tape::backward() {
  if (root_->backward_done) {
    throw ContractError("backward: already ran for this loss; rebuild the graph");
  }
  root_->backward_done = true;
  root_->ensure_grad()[0] = 1.0;
  for (Node* n : order_) {
    if (n->backward_rule && n->grad.size() > 0) n->backward_rule(*n);
  }
}

void backward(const Tensor& loss) { Tape(loss).backward(); }

// ---- Operations ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const Index n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  }
  Vec out(n * m);
  MatMap(out.data(), n, m).noalias() = a.matrix_view() * b.matrix_view();
  return make_op({n, m}, std::move(out), {a, b}, [n, k, m](Node& self) {
    ConstMatMap g(self.grad.data(), n, m);
    Node* av = self.inputs[0].get();
    Node* bv = self.inputs[1].get();
    if (av->requires_grad) {
      grad_mat_of(av).noalias() += g * mat_of(bv).transpose();
    }
    if (bv->requires_grad) {
      grad_mat_of(bv).noalias() += mat_of(av).transpose() * g;
    }
  });
}

Tensor transpose(const Tensor& x) {
  require_2d(x, "transpose");
  const Index n = x.rows(), m = x.cols();
  Vec out(n * m);
  MatMap(out.data(), m, n) = x.matrix_view().transpose();
  return make_op({m, n}, std::move(out), {x}, [n, m](Node& self) {
    ConstMatMap g(self.grad.data(), m, n);
    Node* xv = self.inputs[0].get();
    if (xv->requires_grad) grad_mat_of(xv) += g.transpose();
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Vec out = a.values() + b.values();
  return make_op(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (int i = 0; i < 2; ++i) {
      Node* v = self.inputs[i].get();
      if (v->requires_grad) v->ensure_grad() += self.grad;
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Vec out = a.values() - b.values();
  return make_op(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node* av = self.inputs[0].get();
    Node* bv = self.inputs[1].get();
    if (av->requires_grad) av->ensure_grad() += self.grad;
    if (bv->requires_grad) bv->ensure_grad() -= self.grad;
  });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Vec out = a.values().cwiseProduct(b.values());
  return make_op(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node* av = self.inputs[0].get();
    Node* bv = self.inputs[1].get();
    if (av->requires_grad) {
      av->ensure_grad() += self.grad.cwiseProduct(bv->values);
    }
    if (bv->requires_grad) {
      bv->ensure_grad() += self.grad.cwiseProduct(av->values);
    }
  });
}

Tensor scale(const Tensor& x, Scalar c) {
  require_defined(x, "scale");
  Vec out = x.values() * c;
  return make_op(x.shape(), std::move(out), {x}, [c](Node& self) {
    Node* xv = self.inputs[0].get();
    if (xv->requires_grad) xv->ensure_grad() += c * self.grad;
  });
}

Tensor relu(const Tensor& x) {
  require_defined(x, "relu");
  Vec out = x.values().cwiseMax(0.0);
  return make_op(x.shape(), std::move(out), {x}, [](Node& self) {
    Node* xv = self.inputs[0].get();
    if (!xv->requires_grad) return;
    Vec& g = xv->ensure_grad();
    // Subgradient 0 at exactly 0.
    for (Index i = 0; i < g.size(); ++i) {
      if (xv->values[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Tensor add_rowwise(const Tensor& x, const Tensor& bias) {
  require_2d(x, "add_rowwise");
  require_defined(bias, "add_rowwise");
  const Index n = x.rows(), m = x.cols();
  if (bias.size() != m || bias.ndim() > 2 ||
      (bias.ndim() == 2 && bias.rows() != 1)) {
    throw ShapeError("add_rowwise: bias " + shape_str(bias.shape()) +
                     " does not fit rows of " + shape_str(x.shape()));
  }
  Vec out(n * m);
  MatMap om(out.data(), n, m);
  om = x.matrix_view();
  om.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.values().data(), m);
  return make_op({n, m}, std::move(out), {x, bias}, [n, m](Node& self) {
    ConstMatMap g(self.grad.data(), n, m);
    Node* xv = self.inputs[0].get();
    Node* bv = self.inputs[1].get();
    if (xv->requires_grad) xv->ensure_grad() += self.grad;
    if (bv->requires_grad) {
      Eigen::Map<Eigen::RowVectorXd>(bv->ensure_grad().data(), m) +=
          g.colwise().sum();
    }
  });
}

namespace {

// Shared softmax forward: max-subtracted exponentials per row, optionally
// restricted to an allowed set. Disallowed entries come out exactly 0.
Vec softmax_values(const Tensor& x, const Mask* allowed) {
  const Index n = x.rows(), m = x.cols();
  ConstMatMap xm = x.matrix_view();
  Vec out = Vec::Zero(n * m);
  MatMap om(out.data(), n, m);
  for (Index i = 0; i < n; ++i) {
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < m; ++j) {
      if (allowed && !(*allowed)(i, j)) continue;
      mx = std::max(mx, xm(i, j));
    }
    if (!std::isfinite(mx)) {
      throw ContractError("softmax: row " + std::to_string(i) +
                          " has no allowed entries");
    }
    Scalar total = 0.0;
    for (Index j = 0; j < m; ++j) {
      if (allowed && !(*allowed)(i, j)) continue;
      const Scalar e = std::exp(xm(i, j) - mx);
      om(i, j) = e;
      total += e;
    }
    for (Index j = 0; j < m; ++j) om(i, j) /= total;
  }
  return out;
}

std::function<void(Node&)> softmax_backward(Index n, Index m) {
  return [n, m](Node& self) {
    Node* xv = self.inputs[0].get();
    if (!xv->requires_grad) return;
    ConstMatMap g(self.grad.data(), n, m);
    ConstMatMap s(self.values.data(), n, m);
    MatMap gx = grad_mat_of(xv);
    for (Index i = 0; i < n; ++i) {
      const Scalar dot = g.row(i).dot(s.row(i));
      gx.row(i) += s.row(i).cwiseProduct(g.row(i) - Eigen::RowVectorXd::Constant(m, dot));
    }
  };
}

}  // namespace

Tensor softmax_rows(const Tensor& x) {
  require_2d(x, "softmax_rows");
  if (!all_finite(x)) throw NumericsError("softmax_rows: non-finite input");
  const Index n = x.rows(), m = x.cols();
  return make_op({n, m}, softmax_values(x, nullptr), {x}, softmax_backward(n, m));
}

Tensor softmax_rows_masked(const Tensor& x, const Mask& allowed) {
  require_2d(x, "softmax_rows_masked");
  if (allowed.rows() != x.rows() || allowed.cols() != x.cols()) {
    throw ShapeError("softmax_rows_masked: mask shape does not match input");
  }
  if (!all_finite(x)) throw NumericsError("softmax_rows_masked: non-finite input");
  const Index n = x.rows(), m = x.cols();
  return make_op({n, m}, softmax_values(x, &allowed), {x}, softmax_backward(n, m));
}

Tensor log_softmax_rows(const Tensor& x) {
  require_2d(x, "log_softmax_rows");
  if (!all_finite(x)) throw NumericsError("log_softmax_rows: non-finite input");
  const Index n = x.rows(), m = x.cols();
  ConstMatMap xm = x.matrix_view();
  Vec out(n * m);
  MatMap om(out.data(), n, m);
  for (Index i = 0; i < n; ++i) {
    const Scalar mx = xm.row(i).maxCoeff();
    const Scalar lse = mx + std::log((xm.row(i).array() - mx).exp().sum());
    om.row(i) = xm.row(i).array() - lse;
  }
  return make_op({n, m}, std::move(out), {x}, [n, m](Node& self) {
    Node* xv = self.inputs[0].get();
    if (!xv->requires_grad) return;
    ConstMatMap g(self.grad.data(), n, m);
    ConstMatMap y(self.values.data(), n, m);
    MatMap gx = grad_mat_of(xv);
    for (Index i = 0; i < n; ++i) {
      const Scalar gsum = g.row(i).sum();
      gx.row(i) += g.row(i) - gsum * y.row(i).array().exp().matrix();
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Scalar eps) {
  require_2d(x, "layer_norm");
  require_defined(gamma, "layer_norm");
  require_defined(beta, "layer_norm");
  const Index n = x.rows(), d = x.cols();
  if (gamma.size() != d || beta.size() != d) {
    throw ShapeError("layer_norm: affine parameters must have length " +
                     std::to_string(d));
  }
  ConstMatMap xm = x.matrix_view();
  Eigen::Map<const Eigen::RowVectorXd> gm(gamma.values().data(), d);
  Eigen::Map<const Eigen::RowVectorXd> bm(beta.values().data(), d);

  Vec xhat(n * d);
  Vec inv_std(n);
  MatMap xh(xhat.data(), n, d);
  for (Index i = 0; i < n; ++i) {
    const Scalar mu = xm.row(i).mean();
    const Scalar var = (xm.row(i).array() - mu).square().mean();
    const Scalar inv = 1.0 / std::sqrt(var + eps);
    inv_std[i] = inv;
    xh.row(i) = (xm.row(i).array() - mu) * inv;
  }
  Vec out(n * d);
  MatMap om(out.data(), n, d);
  om = xh.array().rowwise() * gm.array();
  om.rowwise() += bm;

  return make_op({n, d}, std::move(out), {x, gamma, beta},
                 [n, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
    ConstMatMap g(self.grad.data(), n, d);
    ConstMatMap xh(xhat.data(), n, d);
    Node* xv = self.inputs[0].get();
    Node* gv = self.inputs[1].get();
    Node* bv = self.inputs[2].get();
    if (gv->requires_grad) {
      Eigen::Map<Eigen::RowVectorXd>(gv->ensure_grad().data(), d) +=
          (g.array() * xh.array()).colwise().sum().matrix();
    }
    if (bv->requires_grad) {
      Eigen::Map<Eigen::RowVectorXd>(bv->ensure_grad().data(), d) +=
          g.colwise().sum();
    }
    if (xv->requires_grad) {
      Eigen::Map<const Eigen::RowVectorXd> gamma_row(gv->values.data(), d);
      MatMap gx = grad_mat_of(xv);
      for (Index i = 0; i < n; ++i) {
        const Eigen::RowVectorXd dxhat =
            g.row(i).cwiseProduct(gamma_row);
        const Scalar mean_dxhat = dxhat.mean();
        const Scalar mean_dxhat_xhat = dxhat.cwiseProduct(xh.row(i)).mean();
        gx.row(i) += inv_std[i] *
                     (dxhat.array() - mean_dxhat - xh.row(i).array() * mean_dxhat_xhat)
                         .matrix();
      }
    }
  });
}

Tensor concat_last_dim(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ContractError("concat_last_dim: empty input list");
  const Index n = xs.front().rows();
  Index total = 0;
  std::vector<Index> widths;
  widths.reserve(xs.size());
  for (const Tensor& t : xs) {
    require_2d(t, "concat_last_dim");
    if (t.rows() != n) {
      throw ShapeError("concat_last_dim: row counts disagree");
    }
    widths.push_back(t.cols());
    total += t.cols();
  }
  Vec out(n * total);
  MatMap om(out.data(), n, total);
  Index at = 0;
  for (const Tensor& t : xs) {
    om.middleCols(at, t.cols()) = t.matrix_view();
    at += t.cols();
  }
  return make_op({n, total}, std::move(out), xs,
                 [n, total, widths = std::move(widths)](Node& self) {
    ConstMatMap g(self.grad.data(), n, total);
    Index at = 0;
    for (std::size_t i = 0; i < self.inputs.size(); ++i) {
      Node* v = self.inputs[i].get();
      if (v->requires_grad) {
        grad_mat_of(v) += g.middleCols(at, widths[i]);
      }
      at += widths[i];
    }
  });
}

Tensor sum_all(const Tensor& x) {
  require_defined(x, "sum_all");
  Vec out(1);
  out[0] = x.values().sum();
  return make_op({1}, std::move(out), {x}, [](Node& self) {
    Node* xv = self.inputs[0].get();
    if (xv->requires_grad) {
      xv->ensure_grad().array() += self.grad[0];
    }
  });
}

Tensor reshape(const Tensor& x, std::vector<Index> shape) {
  require_defined(x, "reshape");
  if (shape_product(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                     shape_str(shape));
  }
  Vec out = x.values();
  return make_op(std::move(shape), std::move(out), {x}, [](Node& self) {
    Node* xv = self.inputs[0].get();
    if (xv->requires_grad) xv->ensure_grad() += self.grad;
  });
}

Tensor gather_flat(const Tensor& x, std::vector<Index> indices,
                   std::vector<Index> out_shape) {
  require_defined(x, "gather_flat");
  if (shape_product(out_shape) != static_cast<Index>(indices.size())) {
    throw ShapeError("gather_flat: index count does not match output shape");
  }
  const Index limit = x.size();
  Vec out(static_cast<Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= limit) {
      throw ShapeError("gather_flat: index out of range");
    }
    out[static_cast<Index>(i)] = x.values()[indices[i]];
  }
  return make_op(std::move(out_shape), std::move(out), {x},
                 [indices = std::move(indices)](Node& self) {
    Node* xv = self.inputs[0].get();
    if (!xv->requires_grad) return;
    Vec& g = xv->ensure_grad();
    for (std::size_t i = 0; i < indices.size(); ++i) {
      g[indices[i]] += self.grad[static_cast<Index>(i)];
    }
  });
}

Tensor embed_rows(const Tensor& table, const std::vector<int>& ids) {
  require_2d(table, "embed_rows");
  if (ids.empty()) throw ContractError("embed_rows: empty id sequence");
  const Index v = table.rows(), d = table.cols();
  Vec out(static_cast<Index>(ids.size()) * d);
  MatMap om(out.data(), static_cast<Index>(ids.size()), d);
  ConstMatMap tm = table.matrix_view();
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || ids[t] >= v) {
      throw ContractError("embed_rows: id " + std::to_string(ids[t]) +
                          " outside vocabulary of " + std::to_string(v));
    }
    om.row(static_cast<Index>(t)) = tm.row(ids[t]);
  }
  return make_op({static_cast<Index>(ids.size()), d}, std::move(out), {table},
                 [ids, d](Node& self) {
    Node* tv = self.inputs[0].get();
    if (!tv->requires_grad) return;
    MatMap gt = grad_mat_of(tv);
    ConstMatMap g(self.grad.data(), static_cast<Index>(ids.size()), d);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      gt.row(ids[t]) += g.row(static_cast<Index>(t));
    }
  });
}

Tensor dropout(const Tensor& x, Scalar rate, Rng& rng) {
  require_defined(x, "dropout");
  if (rate < 0.0 || rate >= 1.0) {
    throw ContractError("dropout: rate must lie in [0, 1)");
  }
  if (rate == 0.0) return x;
  const Scalar keep_scale = 1.0 / (1.0 - rate);
  Vec mask(x.size());
  for (Index i = 0; i < mask.size(); ++i) {
    mask[i] = rng.uniform() >= rate ? keep_scale : 0.0;
  }
  Vec out = x.values().cwiseProduct(mask);
  return make_op(x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node& self) {
    Node* xv = self.inputs[0].get();
    if (xv->requires_grad) xv->ensure_grad() += self.grad.cwiseProduct(mask);
  });
}

Tensor apply_dropout(const Tensor& x, const DropoutCtx& ctx) {
  return ctx.enabled() ? dropout(x, ctx.rate, *ctx.rng) : x;
}

bool all_finite(const Tensor& x) {
  return x.defined() && x.values().allFinite();
}

namespace detail {

Tensor make_custom_op(std::vector<Index> shape, Vec values,
                      std::vector<Tensor> inputs,
                      std::function<void(Node&)> backward_rule) {
  return make_op(std::move(shape), std::move(values), std::move(inputs),
                 std::move(backward_rule));
}

}  // namespace detail

}  // namespace attnlab
