// Copyright 2026 The attnlab Authors
// Core scalar/matrix aliases and error types.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_TYPES_HPP
#define ATTNLAB_TYPES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace attnlab {

// All numeric state is 64-bit. Desk-scale speed is not a concern; gradient
// checks at 1e-4 relative error are.
using Scalar = double;
using Index = Eigen::Index;

using Vec = Eigen::VectorXd;
using MatRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<MatRM>;
using ConstMatMap = Eigen::Map<const MatRM>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension / shape disagreement between operands.
struct ShapeError : Error {
  using Error::Error;
};

// A documented precondition was violated by the caller.
struct ContractError : Error {
  using Error::Error;
};

// Non-finite values or other numeric failure states.
struct NumericsError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// FNV-1a over raw bytes, hex-encoded; used to fingerprint config echoes.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace attnlab

#endif  // ATTNLAB_TYPES_HPP
