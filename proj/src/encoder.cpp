// Copyright 2026 The attnlab Authors
// Encoder stack implementation.
//
// Licensed under the Apache License, Version 2.0

#include "attnlab/encoder.hpp"

#include <cmath>

#include "attnlab/init.hpp"

namespace attnlab {

void EncoderConfig::validate() const {
  if (num_sa_layers < 0 || num_ff_layers < 0) {
    throw ConfigError("encoder: layer counts must be non-negative");
  }
  if (d_model < 1 || num_heads < 1 || d_k < 1 || d_v < 1 || d_ff < 1) {
    throw ConfigError("encoder: dimensions must be positive");
  }
  if (d_model != num_heads * d_v) {
    throw ConfigError("encoder: d_model must equal num_heads * d_v");
  }
  if (d_model % 2 != 0) {
    throw ConfigError("encoder: d_model must be even for sinusoidal encoding");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("encoder: dropout must lie in [0, 1)");
  }
}

Index subsample_len(Index n) { return (n - 3) / 2 + 1; }

Index frontend_output_len(Index n) { return subsample_len(subsample_len(n)); }

MatRM positional_encoding(Index n, Index d_model) {
  if (d_model % 2 != 0) {
    throw ContractError("positional_encoding: d_model must be even");
  }
  MatRM pe(n, d_model);
  for (Index pos = 0; pos < n; ++pos) {
    for (Index i = 0; i < d_model / 2; ++i) {
      const Scalar angle =
          static_cast<Scalar>(pos) /
          std::pow(10000.0, static_cast<Scalar>(2 * i) / static_cast<Scalar>(d_model));
      pe(pos, 2 * i) = std::sin(angle);
      pe(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

Tensor ffn_forward(const Tensor& x, const FfnParams& params) {
  Tensor hidden = relu(add_rowwise(matmul(x, params.w_hidden), params.b_hidden));
  return add_rowwise(matmul(hidden, params.w_out), params.b_out);
}

namespace {

// Patch-gather indices for one valid kernel-3 stride-2 convolution over a
// [t_in, f_in, channels] row-major volume.
std::vector<Index> im2col_indices(Index t_in, Index f_in, Index channels,
                                  Index t_out, Index f_out) {
  if (t_out < 1 || f_out < 1 || 2 * (t_out - 1) + 3 > t_in ||
      2 * (f_out - 1) + 3 > f_in) {
    throw ContractError("conv: input volume too small for a valid window");
  }
  std::vector<Index> indices;
  indices.reserve(static_cast<std::size_t>(t_out * f_out * 9 * channels));
  for (Index t = 0; t < t_out; ++t) {
    for (Index f = 0; f < f_out; ++f) {
      for (Index dt = 0; dt < 3; ++dt) {
        for (Index df = 0; df < 3; ++df) {
          for (Index c = 0; c < channels; ++c) {
            indices.push_back(((2 * t + dt) * f_in + (2 * f + df)) * channels + c);
          }
        }
      }
    }
  }
  return indices;
}

Tensor conv_layer(const Tensor& x, Index t_in, Index f_in, Index channels_in,
                  const Tensor& weight, const Tensor& bias) {
  const Index t_out = subsample_len(t_in);
  const Index f_out = subsample_len(f_in);
  Tensor cols = gather_flat(x, im2col_indices(t_in, f_in, channels_in, t_out, f_out),
                            {t_out * f_out, 9 * channels_in});
  return relu(add_rowwise(matmul(cols, weight), bias));
}

Tensor layer_norm_forward(const Tensor& x, const LayerNormParams& ln) {
  return layer_norm(x, ln.gain, ln.bias);
}

}  // namespace

Tensor conv_front_end(const Tensor& features, const ConvFrontEndParams& params) {
  if (features.ndim() != 2) {
    throw ShapeError("conv_front_end: features must be [frames x feature_dim]");
  }
  const Index n = features.rows();
  const Index f = features.cols();
  if (f != params.feature_dim) {
    throw ShapeError("conv_front_end: feature dim " + std::to_string(f) +
                     " does not match parameters built for " +
                     std::to_string(params.feature_dim));
  }
  if (n < 7) {
    throw ContractError("conv_front_end: sequence of " + std::to_string(n) +
                        " frames is too short; need at least 7");
  }
  const Index n1 = subsample_len(n), f1 = subsample_len(f);
  const Index n2 = subsample_len(n1), f2 = subsample_len(f1);

  Tensor h1 = conv_layer(features, n, f, 1, params.conv1_w, params.conv1_b);
  Tensor h2 = conv_layer(h1, n1, f1, params.channels, params.conv2_w, params.conv2_b);
  Tensor flat = reshape(h2, {n2, f2 * params.channels});
  return add_rowwise(matmul(flat, params.proj_w), params.proj_b);
}

SaLayerResult sa_layer_forward(const Tensor& x, const SaLayerParams& params,
                               const DropoutCtx& drop, const Mask* mask) {
  Tensor normed = layer_norm_forward(x, params.ln_attn);
  MhaResult mha = multi_head_attention(normed, normed, normed, params.mha, mask, drop);
  Tensor after_attn = add(x, apply_dropout(mha.output, drop));
  Tensor ffn_out = ffn_forward(layer_norm_forward(after_attn, params.ln_ffn), params.ffn);
  SaLayerResult result;
  result.output = add(after_attn, apply_dropout(ffn_out, drop));
  result.attn = std::move(mha.attn);
  return result;
}

Tensor ff_layer_forward(const Tensor& x, const FfLayerParams& params,
                        const DropoutCtx& drop) {
  Tensor ffn_out = ffn_forward(layer_norm_forward(x, params.ln), params.ffn);
  return add(x, apply_dropout(ffn_out, drop));
}

EncoderResult encoder_forward(const Tensor& features, const EncoderConfig& config,
                              const EncoderParams& params, Rng* dropout_rng) {
  config.validate();
  if (static_cast<Index>(params.sa_layers.size()) != config.num_sa_layers ||
      static_cast<Index>(params.ff_layers.size()) != config.num_ff_layers) {
    throw ContractError("encoder_forward: parameter stack does not match config");
  }
  DropoutCtx drop{config.dropout, dropout_rng};

  Tensor h = conv_front_end(features, params.frontend);
  const Index n = h.rows(), d = h.cols();
  h = scale(h, std::sqrt(static_cast<Scalar>(d)));
  MatRM pe = positional_encoding(n, d);
  h = add(h, Tensor::from_values({n, d}, Eigen::Map<const Vec>(pe.data(), n * d)));

  EncoderResult result;
  result.records.reserve(
      static_cast<std::size_t>(config.num_sa_layers * config.num_heads));
  for (Index layer = 0; layer < config.num_sa_layers; ++layer) {
    SaLayerResult lr =
        sa_layer_forward(h, params.sa_layers[static_cast<std::size_t>(layer)], drop);
    h = lr.output;
    for (Index head = 0; head < static_cast<Index>(lr.attn.size()); ++head) {
      AttentionRecord rec;
      rec.layer_index = static_cast<int>(layer);
      rec.head_index = static_cast<int>(head);
      rec.matrix = std::move(lr.attn[static_cast<std::size_t>(head)]);
      result.records.push_back(std::move(rec));
    }
  }
  for (const FfLayerParams& layer : params.ff_layers) {
    h = ff_layer_forward(h, layer, drop);
  }
  result.memory = layer_norm_forward(h, params.final_ln);
  return result;
}

ConvFrontEndParams init_front_end(const FrontEndConfig& fe, Index d_model, Rng& rng) {
  if (fe.feature_dim < 7) {
    throw ConfigError("front-end: feature_dim must be at least 7 for two "
                      "valid stride-2 convolutions");
  }
  if (fe.channels < 1) throw ConfigError("front-end: channels must be positive");
  const Index f2 = frontend_output_len(fe.feature_dim);
  ConvFrontEndParams params;
  params.channels = fe.channels;
  params.feature_dim = fe.feature_dim;
  params.conv1_w = xavier_uniform({9, fe.channels}, rng);
  params.conv1_b = zeros_vector(fe.channels);
  params.conv2_w = xavier_uniform({9 * fe.channels, fe.channels}, rng);
  params.conv2_b = zeros_vector(fe.channels);
  params.proj_w = xavier_uniform({fe.channels * f2, d_model}, rng);
  params.proj_b = zeros_vector(d_model);
  return params;
}

FfnParams init_ffn(Index d_model, Index d_ff, Rng& rng) {
  FfnParams params;
  params.w_hidden = xavier_uniform({d_model, d_ff}, rng);
  params.b_hidden = zeros_vector(d_ff);
  params.w_out = xavier_uniform({d_ff, d_model}, rng);
  params.b_out = zeros_vector(d_model);
  return params;
}

LayerNormParams init_layer_norm(Index d) {
  return LayerNormParams{ones_vector(d), zeros_vector(d)};
}

SaLayerParams init_sa_layer(const EncoderConfig& config, Rng& rng) {
  SaLayerParams params;
  params.mha = init_mha(config.d_model, config.num_heads, config.d_k, config.d_v, rng);
  params.ffn = init_ffn(config.d_model, config.d_ff, rng);
  params.ln_attn = init_layer_norm(config.d_model);
  params.ln_ffn = init_layer_norm(config.d_model);
  return params;
}

FfLayerParams init_ff_layer(const EncoderConfig& config, Rng& rng) {
  FfLayerParams params;
  params.ffn = init_ffn(config.d_model, config.d_ff, rng);
  params.ln = init_layer_norm(config.d_model);
  return params;
}

EncoderParams init_encoder(const EncoderConfig& config, const FrontEndConfig& fe,
                           Rng& rng) {
  config.validate();
  EncoderParams params;
  params.frontend = init_front_end(fe, config.d_model, rng);
  params.sa_layers.reserve(static_cast<std::size_t>(config.num_sa_layers));
  for (Index i = 0; i < config.num_sa_layers; ++i) {
    params.sa_layers.push_back(init_sa_layer(config, rng));
  }
  params.ff_layers.reserve(static_cast<std::size_t>(config.num_ff_layers));
  for (Index i = 0; i < config.num_ff_layers; ++i) {
    params.ff_layers.push_back(init_ff_layer(config, rng));
  }
  params.final_ln = init_layer_norm(config.d_model);
  return params;
}

}  // namespace attnlab
