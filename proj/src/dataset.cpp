// Copyright 2026 The attnlab Authors
// Synthetic task generation.
//
// Licensed under the Apache License, Version 2.0

#include "attnlab/dataset.hpp"

#include <cstdio>

namespace attnlab {

void SyntheticTaskConfig::validate() const {
  if (vocab_size < 3) {
    throw ConfigError("task: vocab_size must be at least 3");
  }
  if (upsample < 4) {
    throw ConfigError("task: upsample factor must be at least 4 to survive "
                      "the front-end subsampling");
  }
  if (min_len < 1 || max_len < min_len) {
    throw ConfigError("task: need 1 <= min_len <= max_len");
  }
  if (feature_dim < 7) {
    throw ConfigError("task: feature_dim must be at least 7 for the conv front-end");
  }
  if (noise_std < 0.0) throw ConfigError("task: noise_std must be non-negative");
  if (count < 1) throw ConfigError("task: count must be positive");
  if (min_len * upsample < 7) {
    throw ConfigError("task: min_len * upsample must be at least 7 frames");
  }
}

MatRM token_prototypes(const SyntheticTaskConfig& config) {
  config.validate();
  Rng rng = Rng::stream(config.seed, 0);
  const Scalar min_sep = std::max(10.0 * config.noise_std, 1.0);
  MatRM protos(config.vocab_size, config.feature_dim);
  for (Index t = 0; t < config.vocab_size; ++t) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) {
        throw ConfigError("task: cannot place separated prototypes; lower "
                          "noise_std or vocab_size, or raise feature_dim");
      }
      for (Index d = 0; d < config.feature_dim; ++d) protos(t, d) = rng.normal();
      bool separated = true;
      for (Index u = 0; u < t && separated; ++u) {
        separated = (protos.row(t) - protos.row(u)).norm() >= min_sep;
      }
      if (separated) break;
    }
  }
  return protos;
}

Dataset gen_monotonic_task(const SyntheticTaskConfig& config) {
  config.validate();
  const MatRM protos = token_prototypes(config);
  Rng rng = Rng::stream(config.effective_utterance_seed(), 1);

  Dataset dataset;
  dataset.config = config;
  dataset.utterances.reserve(static_cast<std::size_t>(config.count));
  for (Index u = 0; u < config.count; ++u) {
    Utterance utt;
    char id[24];
    std::snprintf(id, sizeof(id), "u%06lld", static_cast<long long>(u));
    utt.id = id;

    const Index len =
        config.min_len +
        static_cast<Index>(rng.below(static_cast<std::uint64_t>(
            config.max_len - config.min_len + 1)));
    utt.target.reserve(static_cast<std::size_t>(len));
    for (Index i = 0; i < len; ++i) {
      utt.target.push_back(static_cast<int>(
          rng.below(static_cast<std::uint64_t>(config.vocab_size))));
    }

    utt.features.resize(len * config.upsample, config.feature_dim);
    for (Index i = 0; i < len; ++i) {
      for (Index r = 0; r < config.upsample; ++r) {
        const Index frame = i * config.upsample + r;
        for (Index d = 0; d < config.feature_dim; ++d) {
          utt.features(frame, d) =
              protos(utt.target[static_cast<std::size_t>(i)], d) +
              config.noise_std * rng.normal();
        }
      }
    }
    dataset.utterances.push_back(std::move(utt));
  }
  return dataset;
}

}  // namespace attnlab
