// Copyright 2026 The attnlab Authors
// Parameter initializers.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_INIT_HPP
#define ATTNLAB_INIT_HPP

#include <cmath>

#include "attnlab/rng.hpp"
#include "attnlab/tensor.hpp"

namespace attnlab {

// Glorot/Xavier uniform over [-sqrt(6/(fan_in+fan_out)), +...] for 2-D
// weights; draws are consumed in row-major order so initialization is a
// pure function of the stream position.
inline Tensor xavier_uniform(std::vector<Index> shape, Rng& rng) {
  if (shape.size() != 2) throw ShapeError("xavier_uniform: expects a 2-D shape");
  const Scalar bound =
      std::sqrt(6.0 / static_cast<Scalar>(shape[0] + shape[1]));
  Index n = shape[0] * shape[1];
  Vec values(n);
  for (Index i = 0; i < n; ++i) values[i] = rng.uniform(-bound, bound);
  return Tensor::from_values(std::move(shape), std::move(values));
}

inline Tensor zeros_vector(Index n) { return Tensor::zeros({n}); }

inline Tensor ones_vector(Index n) {
  return Tensor::from_values({n}, Vec::Constant(n, 1.0));
}

}  // namespace attnlab

#endif  // ATTNLAB_INIT_HPP
