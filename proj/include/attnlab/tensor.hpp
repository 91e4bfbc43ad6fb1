// Copyright 2026 The attnlab Authors
// Dense 64-bit tensors with reverse-mode automatic differentiation.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_TENSOR_HPP
#define ATTNLAB_TENSOR_HPP

#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "attnlab/detail/graph.hpp"
#include "attnlab/rng.hpp"
#include "attnlab/types.hpp"

namespace attnlab {

// Handle to a graph node. Copies share the underlying node, so a
// parameter handed to an optimizer and the same parameter inside a model
// struct see one value/gradient buffer. Ops build fresh nodes; leaves are
// the only tensors whose values are mutated in place.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from_values(std::vector<Index> shape, Vec values,
                            bool requires_grad = false);
  static Tensor zeros(std::vector<Index> shape, bool requires_grad = false);
  static Tensor constant(std::vector<Index> shape, Scalar value);
  static Tensor scalar(Scalar value);
  // Row-major 2-D literal, handy in tests.
  static Tensor matrix(std::initializer_list<std::initializer_list<Scalar>> rows,
                       bool requires_grad = false);
  static Tensor vector(std::initializer_list<Scalar> entries,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<Index>& shape() const;
  Index ndim() const { return static_cast<Index>(shape().size()); }
  Index size() const;
  Index rows() const;  // 2-D only
  Index cols() const;  // 2-D only

  const Vec& values() const;
  // In-place mutation; meaningful for leaves (parameters) only.
  Vec& mutable_values();
  Scalar item() const;  // single-element tensors

  ConstMatMap matrix_view() const;  // 2-D view of the flat storage
  MatMap mutable_matrix_view();

  bool requires_grad() const;
  void set_requires_grad(bool requires_grad);  // leaves only
  bool is_leaf() const;

  bool has_grad() const;
  const Vec& grad() const;  // throws if no gradient has been accumulated
  void zero_grad();

  // Value copy with no graph attachment.
  Tensor detach() const;

  detail::Node* node() const { return node_.get(); }
  const detail::NodePtr& node_ptr() const { return node_; }
  explicit Tensor(detail::NodePtr node) : node_(std::move(node)) {}

 private:
  detail::NodePtr node_;
};

// Linearized view of the graph reachable from a scalar root: the recorded
// operations in topological order plus the reverse sweep that accumulates
// leaf gradients. Constructing a Tape checks the root contract; backward()
// may run once per root.
class Tape {
 public:
  explicit Tape(const Tensor& root);
  void backward();
  Index num_operations() const { return static_cast<Index>(order_.size()); }

 private:
  detail::NodePtr root_;
  std::vector<detail::Node*> order_;  // descending seq = reverse topological
};

// Runs one reverse sweep from `loss`, accumulating dLoss/dLeaf into every
// requires_grad leaf. Calling it twice on the same root throws.
void backward(const Tensor& loss);

// ---- Forward operations -------------------------------------------------
// Each op is differentiable w.r.t. every Tensor argument that requires
// grad. Shape violations throw ShapeError.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Scalar c);
Tensor relu(const Tensor& x);
// Adds a length-m bias vector to every row of an n-by-m matrix; the one
// broadcast the layer algebra needs.
Tensor add_rowwise(const Tensor& x, const Tensor& bias);
Tensor softmax_rows(const Tensor& x);
// Softmax over the allowed entries of each row; disallowed entries carry
// exactly zero weight. A row with no allowed entry throws ContractError.
Tensor softmax_rows_masked(const Tensor& x, const Mask& allowed);
Tensor log_softmax_rows(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Scalar eps = 1e-12);
Tensor concat_last_dim(const std::vector<Tensor>& xs);
Tensor sum_all(const Tensor& x);
Tensor reshape(const Tensor& x, std::vector<Index> shape);
// out[i] = x.flat[indices[i]]; backward scatter-adds.
Tensor gather_flat(const Tensor& x, std::vector<Index> indices,
                   std::vector<Index> out_shape);
// Row lookup into an embedding table.
Tensor embed_rows(const Tensor& table, const std::vector<int>& ids);
// Inverted dropout with a caller-supplied stream; identity when rate == 0.
Tensor dropout(const Tensor& x, Scalar rate, Rng& rng);

Tensor apply_dropout(const Tensor& x, const DropoutCtx& ctx);

bool all_finite(const Tensor& x);

namespace detail {
// Records an operation with a hand-written backward rule. The rule runs
// only when some input requires a gradient; it reads self.grad and
// accumulates into self.inputs[i]->ensure_grad().
Tensor make_custom_op(std::vector<Index> shape, Vec values,
                      std::vector<Tensor> inputs,
                      std::function<void(Node&)> backward_rule);
}  // namespace detail

}  // namespace attnlab

#endif  // ATTNLAB_TENSOR_HPP
