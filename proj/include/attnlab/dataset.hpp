// Copyright 2026 The attnlab Authors
// Synthetic monotonic transduction task.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_DATASET_HPP
#define ATTNLAB_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "attnlab/rng.hpp"
#include "attnlab/types.hpp"

namespace attnlab {

struct SyntheticTaskConfig {
  Index vocab_size = 16;  // task tokens, beyond blank/sos/eos/pad
  Index min_len = 2;
  Index max_len = 12;
  Index upsample = 4;  // frames per target token
  Index feature_dim = 8;
  Scalar noise_std = 0.1;
  std::uint64_t seed = 7;
  // Utterance sampling stream; 0 means "same as seed". Prototypes always
  // derive from `seed`, so a held-out set drawn from the same task uses
  // the same seed with a different utterance_seed.
  std::uint64_t utterance_seed = 0;
  Index count = 100;

  void validate() const;

  std::uint64_t effective_utterance_seed() const {
    return utterance_seed == 0 ? seed : utterance_seed;
  }
};

struct Utterance {
  std::string id;
  MatRM features;           // [upsample * |target|, feature_dim]
  std::vector<int> target;  // task tokens in [0, vocab_size)
};

struct Dataset {
  SyntheticTaskConfig config;
  std::string config_text;  // generating config echo; may be empty
  std::vector<Utterance> utterances;
};

// Token prototype vectors, one row per task token. Prototypes are
// rejection-sampled to keep pairwise distances at least
// max(10 * noise_std, 1), so a nearest-prototype classifier recovers
// noiseless frames exactly and noisy frames almost surely.
MatRM token_prototypes(const SyntheticTaskConfig& config);

// Each utterance: uniform target tokens, each token's prototype repeated
// `upsample` times, Gaussian noise on top. The alignment is strictly
// monotonic left-to-right by construction. Same seed, same bytes.
Dataset gen_monotonic_task(const SyntheticTaskConfig& config);

}  // namespace attnlab

#endif  // ATTNLAB_DATASET_HPP
