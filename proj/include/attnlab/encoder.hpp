// Copyright 2026 The attnlab Authors
// Convolutional front-end and the lower-SA / upper-FF encoder stack.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_ENCODER_HPP
#define ATTNLAB_ENCODER_HPP

#include <vector>

#include "attnlab/attention.hpp"
#include "attnlab/tensor.hpp"

namespace attnlab {

// Layer composition of the encoder: feed-forward layers always sit
// strictly above all self-attention layers.
struct EncoderConfig {
  Index num_sa_layers = 0;
  Index num_ff_layers = 0;
  Index d_model = 64;
  Index num_heads = 4;
  Index d_k = 16;
  Index d_v = 16;
  Index d_ff = 256;
  Scalar dropout = 0.1;

  Index total_layers() const { return num_sa_layers + num_ff_layers; }
  void validate() const;
};

struct FrontEndConfig {
  Index feature_dim = 8;  // must admit two valid 3-wide stride-2 convolutions
  Index channels = 256;
};

struct LayerNormParams {
  Tensor gain;  // [d]
  Tensor bias;  // [d]
};

// Position-wise feed-forward block: relu(x W_h + b_h) W_o + b_o.
struct FfnParams {
  Tensor w_hidden;  // [d_model, d_ff]
  Tensor b_hidden;  // [d_ff]
  Tensor w_out;     // [d_ff, d_model]
  Tensor b_out;     // [d_model]
};

struct SaLayerParams {
  MhaParams mha;
  FfnParams ffn;
  LayerNormParams ln_attn;  // before the attention sublayer
  LayerNormParams ln_ffn;   // before the feed-forward sublayer
};

struct FfLayerParams {
  FfnParams ffn;
  LayerNormParams ln;
};

// Two 2-D convolutions (kernel 3, stride 2 in both time and frequency,
// valid padding, ReLU) followed by a linear map to d_model. Weights are
// stored as im2col matrices with patch rows ordered (dt, df, channel).
struct ConvFrontEndParams {
  Tensor conv1_w;  // [9, channels]
  Tensor conv1_b;  // [channels]
  Tensor conv2_w;  // [9 * channels, channels]
  Tensor conv2_b;  // [channels]
  Tensor proj_w;   // [channels * reduced_feature_dim, d_model]
  Tensor proj_b;   // [d_model]
  Index channels = 0;
  Index feature_dim = 0;
};

struct EncoderParams {
  ConvFrontEndParams frontend;
  std::vector<SaLayerParams> sa_layers;
  std::vector<FfLayerParams> ff_layers;
  LayerNormParams final_ln;
};

// Output length of one valid kernel-3 stride-2 convolution.
Index subsample_len(Index n);
// Frame count after the two-convolution front-end.
Index frontend_output_len(Index n);

// Sinusoidal table: PE[pos, 2i] = sin(pos / 10000^(2i/d)),
// PE[pos, 2i+1] = cos(same argument). Requires even d_model.
MatRM positional_encoding(Index n, Index d_model);

Tensor ffn_forward(const Tensor& x, const FfnParams& params);

Tensor conv_front_end(const Tensor& features, const ConvFrontEndParams& params);

struct SaLayerResult {
  Tensor output;
  std::vector<MatRM> attn;  // one per head
};

// Pre-norm residual form: x' = x + MHA(LN(x)); out = x' + FFN(LN(x')).
SaLayerResult sa_layer_forward(const Tensor& x, const SaLayerParams& params,
                               const DropoutCtx& drop = {},
                               const Mask* mask = nullptr);

// Pre-norm residual form: out = x + FFN(LN(x)); strictly position-wise.
Tensor ff_layer_forward(const Tensor& x, const FfLayerParams& params,
                        const DropoutCtx& drop = {});

struct EncoderResult {
  Tensor memory;  // [frontend_output_len(n), d_model]
  std::vector<AttentionRecord> records;  // num_sa_layers * num_heads, (layer, head) order
};

// Front-end -> scale by sqrt(d_model) -> add positional encoding ->
// SA layers -> FF layers -> final layer norm.
EncoderResult encoder_forward(const Tensor& features, const EncoderConfig& config,
                              const EncoderParams& params,
                              Rng* dropout_rng = nullptr);

ConvFrontEndParams init_front_end(const FrontEndConfig& fe, Index d_model, Rng& rng);
FfnParams init_ffn(Index d_model, Index d_ff, Rng& rng);
LayerNormParams init_layer_norm(Index d);
SaLayerParams init_sa_layer(const EncoderConfig& config, Rng& rng);
FfLayerParams init_ff_layer(const EncoderConfig& config, Rng& rng);
EncoderParams init_encoder(const EncoderConfig& config, const FrontEndConfig& fe,
                           Rng& rng);

}  // namespace attnlab

#endif  // ATTNLAB_ENCODER_HPP
