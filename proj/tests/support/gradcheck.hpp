// Copyright 2026 The attnlab Authors
// Central finite-difference gradient checker (test-only).
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_TESTS_GRADCHECK_HPP
#define ATTNLAB_TESTS_GRADCHECK_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "attnlab/rng.hpp"
#include "attnlab/tensor.hpp"

namespace testsupport {

using attnlab::Index;
using attnlab::Rng;
using attnlab::Scalar;
using attnlab::Tensor;
using attnlab::Vec;

// Compares the tape gradient of each leaf against (f(x+eps) - f(x-eps)) /
// (2 eps), entry by entry. `forward` must rebuild the graph from the live
// leaf values on every call. Error is |fd - tape| / max(1, |fd|, |tape|).
// `samples_per_leaf` < 0 checks every entry; otherwise that many entries
// are drawn per leaf with `pick`.
inline Scalar max_fd_error(const std::function<Tensor()>& forward,
                           std::vector<Tensor> leaves, Scalar eps = 1e-6,
                           long samples_per_leaf = -1, Rng* pick = nullptr) {
  for (Tensor& leaf : leaves) leaf.zero_grad();
  Tensor loss = forward();
  attnlab::backward(loss);

  Scalar worst = 0.0;
  for (Tensor& leaf : leaves) {
    const Vec tape_grad =
        leaf.has_grad() ? leaf.grad() : Vec::Zero(leaf.size());
    std::vector<Index> picks;
    if (samples_per_leaf < 0 || samples_per_leaf >= leaf.size()) {
      for (Index i = 0; i < leaf.size(); ++i) picks.push_back(i);
    } else {
      for (long s = 0; s < samples_per_leaf; ++s) {
        picks.push_back(static_cast<Index>(
            pick->below(static_cast<std::uint64_t>(leaf.size()))));
      }
    }
    for (Index idx : picks) {
      Vec& values = leaf.mutable_values();
      const Scalar original = values[idx];
      values[idx] = original + eps;
      const Scalar f_plus = forward().item();
      values[idx] = original - eps;
      const Scalar f_minus = forward().item();
      values[idx] = original;
      const Scalar fd = (f_plus - f_minus) / (2.0 * eps);
      const Scalar err = std::abs(fd - tape_grad[idx]) /
                         std::max({1.0, std::abs(fd), std::abs(tape_grad[idx])});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

inline Tensor random_tensor(std::vector<Index> shape, Rng& rng,
                            bool requires_grad = true, Scalar span = 1.0) {
  Index n = 1;
  for (Index d : shape) n *= d;
  Vec values(n);
  for (Index i = 0; i < n; ++i) values[i] = rng.uniform(-span, span);
  return Tensor::from_values(std::move(shape), std::move(values), requires_grad);
}

}  // namespace testsupport

#endif  // ATTNLAB_TESTS_GRADCHECK_HPP
