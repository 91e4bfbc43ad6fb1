// Copyright 2026 The attnlab Authors
// Whole-model parameter registry and per-utterance forward paths.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_MODEL_HPP
#define ATTNLAB_MODEL_HPP

#include <string>
#include <utility>
#include <vector>

#include "attnlab/seq2seq.hpp"

namespace attnlab {

struct ModelConfig {
  EncoderConfig encoder;
  FrontEndConfig frontend;
  Index decoder_layers = 2;
  Index vocab_size = 0;  // includes the special ids

  DecoderConfig decoder_config() const;
  void validate() const;
};

struct ModelParams {
  EncoderParams encoder;
  DecoderParams decoder;
  Tensor ctc_w;  // [d_model, vocab]; CTC branch projection off the memory
  Tensor ctc_b;  // [vocab]
};

ModelParams init_model(const ModelConfig& config, Rng& rng);

// Stable construction-order registry of every trainable tensor. Names are
// unique; two calls on the same params return handles to the same nodes.
std::vector<std::pair<std::string, Tensor>> named_parameters(const ModelParams& params);

Index parameter_count(const ModelParams& params);

void make_trainable(ModelParams& params);

struct LossParts {
  Tensor total;
  Scalar decoder_value = 0.0;
  Scalar ctc_value = 0.0;  // 0 when the CTC branch is disabled (lambda == 0)
};

// Joint loss of one utterance. `target_ids` are model-vocabulary ids
// (no sos/eos markers; those are added internally). Throws NumericsError
// when lambda > 0 and the utterance admits no CTC alignment.
LossParts model_loss(const Tensor& features, const std::vector<int>& target_ids,
                     const ModelConfig& config, const ModelParams& params,
                     const LossConfig& loss, Rng* dropout_rng = nullptr);

// Evaluation-mode greedy transcription, reported as task tokens.
std::vector<int> transcribe(const Tensor& features, const ModelConfig& config,
                            const ModelParams& params, Index max_len);

}  // namespace attnlab

#endif  // ATTNLAB_MODEL_HPP
