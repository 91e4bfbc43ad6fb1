// Copyright 2026 The attnlab Authors
// Reverse-mode graph node shared by the tensor ops.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_DETAIL_GRAPH_HPP
#define ATTNLAB_DETAIL_GRAPH_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "attnlab/types.hpp"

namespace attnlab::detail {

// One recorded value in the computation graph. Operation nodes keep
// shared ownership of their inputs, so the reachable graph from a loss
// root is exactly the tape for that loss. `seq` is a global creation
// counter: inputs are always created before outputs, hence descending
// `seq` is a valid reverse-topological schedule.
struct Node {
  std::vector<Index> shape;
  Vec values;
  Vec grad;  // size 0 until first accumulation
  bool requires_grad = false;
  bool backward_done = false;  // set on roots after a backward pass
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  // Accumulates input gradients given this node's `grad`.
  std::function<void(Node&)> backward_rule;

  Index size() const {
    Index n = 1;
    for (Index d : shape) n *= d;
    return n;
  }

  Vec& ensure_grad() {
    if (grad.size() == 0) grad = Vec::Zero(values.size());
    return grad;
  }

  static std::uint64_t next_seq() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
  }
};

using NodePtr = std::shared_ptr<Node>;

}  // namespace attnlab::detail

#endif  // ATTNLAB_DETAIL_GRAPH_HPP
