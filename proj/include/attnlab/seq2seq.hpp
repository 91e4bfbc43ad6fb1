// Copyright 2026 The attnlab Authors
// Transformer decoder, CTC and label-smoothed losses, greedy decoding.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_SEQ2SEQ_HPP
#define ATTNLAB_SEQ2SEQ_HPP

#include <optional>
#include <vector>

#include "attnlab/encoder.hpp"

namespace attnlab {

// Fixed vocabulary layout: specials first, task tokens after.
namespace vocab {
inline constexpr int kBlank = 0;
inline constexpr int kPad = 1;
inline constexpr int kSos = 2;
inline constexpr int kEos = 3;
inline constexpr int kNumSpecial = 4;

inline int token_id(int task_token) { return task_token + kNumSpecial; }
inline int task_token(int id) { return id - kNumSpecial; }
}  // namespace vocab

struct DecoderConfig {
  Index num_layers = 2;
  Index vocab_size = 0;  // includes the special ids
  Index d_model = 64;
  Index num_heads = 4;
  Index d_k = 16;
  Index d_v = 16;
  Index d_ff = 256;
  Scalar dropout = 0.1;

  void validate() const;
};

struct LossConfig {
  Scalar lambda = 0.3;            // CTC weight in the joint loss
  Scalar smoothing_weight = 0.1;  // label smoothing mass

  void validate() const;
};

// Pre-norm decoder layer: causal self-attention, cross-attention over the
// encoder memory, position-wise feed-forward.
struct DecoderLayerParams {
  MhaParams self_mha;
  MhaParams cross_mha;
  FfnParams ffn;
  LayerNormParams ln_self;
  LayerNormParams ln_cross;
  LayerNormParams ln_ffn;
};

struct DecoderParams {
  Tensor embedding;  // [vocab, d_model]
  std::vector<DecoderLayerParams> layers;
  LayerNormParams final_ln;
  Tensor out_w;  // [d_model, vocab]; untied from the embedding
  Tensor out_b;  // [vocab]
};

// `tokens` must begin with sos. Returns one logit row per input position.
Tensor decoder_forward(const std::vector<int>& tokens, const Tensor& memory,
                       const DecoderConfig& config, const DecoderParams& params,
                       Rng* dropout_rng = nullptr);

// Cross-entropy against (1-w) one-hot + w/(V-1) on the other classes,
// averaged over non-pad target positions.
Tensor label_smoothing_loss(const Tensor& logits, const std::vector<int>& targets,
                            Scalar weight = 0.1);

// -ln P(target | frame posteriors) via the forward recursion over the
// blank-interleaved label sequence, in log space. Returns nullopt when no
// monotonic alignment exists (T shorter than the minimum label length).
std::optional<Tensor> ctc_forward_loss(const Tensor& frame_logits,
                                       const std::vector<int>& target);

// Frames required to align `target`: length plus one blank per adjacent repeat.
Index ctc_min_frames(const std::vector<int>& target);

// (1 - lambda) * decoder_loss + lambda * ctc_loss.
Tensor joint_loss(const Tensor& decoder_loss, const Tensor& ctc_loss, Scalar lambda);

// Feed argmax tokens until eos or max_len; returns the hypothesis without
// sos/eos markers.
std::vector<int> greedy_decode(const Tensor& memory, const DecoderConfig& config,
                               const DecoderParams& params, Index max_len);

DecoderParams init_decoder(const DecoderConfig& config, Rng& rng);

}  // namespace attnlab

#endif  // ATTNLAB_SEQ2SEQ_HPP
