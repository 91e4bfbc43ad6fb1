// Copyright 2026 The attnlab Authors
// Optimizer, schedule, checkpoint averaging, and the training loop.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_TRAINING_HPP
#define ATTNLAB_TRAINING_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "attnlab/dataset.hpp"
#include "attnlab/model.hpp"

namespace attnlab {

struct ScheduleConfig {
  Index d_model = 64;
  Index warmup_steps = 400;
  Scalar factor = 1.0;
};

// factor * d_model^-0.5 * min(step^-0.5, step * warmup^-1.5); linear
// warmup to the peak at step == warmup_steps, inverse-sqrt decay after.
Scalar noam_lr(long step, const ScheduleConfig& config);

struct AdamConfig {
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.98;
  Scalar eps = 1e-9;
};

// Moment buffers aligned with a named-parameter registry.
struct AdamState {
  struct Slot {
    Vec m;
    Vec v;
  };
  std::vector<Slot> slots;
  long step = 0;
};

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

AdamState init_adam_state(const NamedParams& params);

// One bias-corrected Adam update from the gradients accumulated on the
// parameter tensors. Missing gradients count as zero; a non-finite
// gradient aborts the step with the parameter named in the diagnostic.
void adam_step(NamedParams& params, AdamState& state, Scalar lr,
               const AdamConfig& config = {});

// Scales all gradients so their global norm is at most max_norm.
// Returns the pre-clip norm.
Scalar clip_grad_norm(NamedParams& params, Scalar max_norm);

struct CheckpointMeta {
  int epoch = 0;
  long step = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string config_text;
  Index vocab_size = 0;
  Index feature_dim = 0;
};

struct Checkpoint {
  CheckpointMeta meta;
  NamedParams params;  // frozen value copies
};

Checkpoint snapshot(const ModelParams& params, CheckpointMeta meta);

// Arithmetic mean per parameter. Requires at least one checkpoint and
// identical name sets and config hashes throughout.
Checkpoint average_checkpoints(const std::vector<Checkpoint>& checkpoints);

// Copies checkpoint values into an already-constructed model by name.
void load_into(const Checkpoint& checkpoint, ModelParams& params);

// Levenshtein distance summed over pairs divided by total reference tokens.
Scalar token_error_rate(const std::vector<std::vector<int>>& hyps,
                        const std::vector<std::vector<int>>& refs);

Index levenshtein(const std::vector<int>& a, const std::vector<int>& b);

struct RunConfig {
  std::uint64_t seed = 1;
  int epochs = 10;
  int batch_size = 8;
  long max_steps = 0;  // 0 = run all epochs
  Index warmup_steps = 400;
  Scalar lr_factor = 1.0;
  Scalar clip_norm = 5.0;
  int average_last = 5;  // checkpoint-averaging window
  int val_every = 1;     // epochs between validation passes; 0 disables
  Index decode_max_len = 24;
  std::string out_dir;
  std::string config_text;  // raw config file bytes, echoed into checkpoints

  void validate() const;
};

struct TrainResult {
  std::string final_checkpoint;
  std::string metrics_path;
  std::string validation_path;
  std::vector<std::string> epoch_checkpoints;
  Scalar final_val_ter = -1.0;  // -1 when no validation data was given
  long steps = 0;
};

// Deterministic loop: seeded shuffles, per-batch joint loss, Adam with the
// Noam schedule, one checkpoint per epoch, metric log with one line per
// step (step, epoch, lr, total, decoder, ctc; tab-separated). A non-finite
// loss aborts with the offending step in the diagnostic.
TrainResult train(const ModelConfig& model_config, const LossConfig& loss_config,
                  const Dataset& train_data, const Dataset* val_data,
                  const RunConfig& run);

Scalar evaluate_ter(const Dataset& data, const ModelConfig& config,
                    const ModelParams& params, Index decode_max_len);

}  // namespace attnlab

#endif  // ATTNLAB_TRAINING_HPP
