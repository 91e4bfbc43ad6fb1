// Copyright 2026 The attnlab Authors
// Deterministic random streams with portable draw semantics.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_RNG_HPP
#define ATTNLAB_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "attnlab/types.hpp"

namespace attnlab {

// std::uniform_*_distribution and std::shuffle are implementation-defined,
// so every draw here is spelled out explicitly: identical seeds give
// identical streams on any conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Derive an independent stream from (seed, tag) via splitmix64.
  static Rng stream(std::uint64_t seed, std::uint64_t tag) {
    return Rng(splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (tag + 1))));
  }

  std::uint64_t bits() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  Scalar uniform() { return static_cast<Scalar>(bits() >> 11) * 0x1.0p-53; }

  Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo bias is below 2^-53 for the desk-scale
  // ranges used here.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<Scalar>(n));
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  Scalar normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    Scalar u1 = uniform();
    Scalar u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const Scalar radius = std::sqrt(-2.0 * std::log(u1));
    const Scalar angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Fisher-Yates with explicit index draws.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 gen_;
  Scalar spare_ = 0.0;
  bool has_spare_ = false;
};

// Per-context dropout switch. Forward passes are evaluation-mode whenever
// `rng` is null; training passes supply a seeded stream.
struct DropoutCtx {
  Scalar rate = 0.0;
  Rng* rng = nullptr;

  bool enabled() const { return rng != nullptr && rate > 0.0; }
};

}  // namespace attnlab

#endif  // ATTNLAB_RNG_HPP
