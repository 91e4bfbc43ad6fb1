// Copyright 2026 The attnlab Authors
// Decoder, losses, and greedy search.
//
// Licensed under the Apache License, Version 2.0

#include "attnlab/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "attnlab/init.hpp"

namespace attnlab {

namespace {

constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();

Scalar log_add(Scalar a, Scalar b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const Scalar hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

void DecoderConfig::validate() const {
  if (num_layers < 1) throw ConfigError("decoder: needs at least one layer");
  if (vocab_size <= vocab::kNumSpecial) {
    throw ConfigError("decoder: vocabulary must extend beyond the special ids");
  }
  if (d_model != num_heads * d_v) {
    throw ConfigError("decoder: d_model must equal num_heads * d_v");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("decoder: dropout must lie in [0, 1)");
  }
}

void LossConfig::validate() const {
  if (lambda < 0.0 || lambda > 1.0) {
    throw ConfigError("loss: lambda must lie in [0, 1]");
  }
  if (smoothing_weight < 0.0 || smoothing_weight >= 1.0) {
    throw ConfigError("loss: smoothing weight must lie in [0, 1)");
  }
}

Tensor decoder_forward(const std::vector<int>& tokens, const Tensor& memory,
                       const DecoderConfig& config, const DecoderParams& params,
                       Rng* dropout_rng) {
  config.validate();
  if (tokens.empty()) {
    throw ContractError("decoder_forward: empty token sequence");
  }
  if (tokens.front() != vocab::kSos) {
    throw ContractError("decoder_forward: token sequence must begin with sos");
  }
  DropoutCtx drop{config.dropout, dropout_rng};
  const Index len = static_cast<Index>(tokens.size());
  const Index d = config.d_model;

  Tensor x = scale(embed_rows(params.embedding, tokens),
                   std::sqrt(static_cast<Scalar>(d)));
  MatRM pe = positional_encoding(len, d);
  x = add(x, Tensor::from_values({len, d}, Eigen::Map<const Vec>(pe.data(), len * d)));

  const Mask self_mask = causal_mask(len);
  for (const DecoderLayerParams& layer : params.layers) {
    Tensor a = layer_norm(x, layer.ln_self.gain, layer.ln_self.bias);
    MhaResult self_attn =
        multi_head_attention(a, a, a, layer.self_mha, &self_mask, drop);
    x = add(x, apply_dropout(self_attn.output, drop));

    Tensor b = layer_norm(x, layer.ln_cross.gain, layer.ln_cross.bias);
    MhaResult cross =
        multi_head_attention(b, memory, memory, layer.cross_mha, nullptr, drop);
    x = add(x, apply_dropout(cross.output, drop));

    Tensor c = layer_norm(x, layer.ln_ffn.gain, layer.ln_ffn.bias);
    x = add(x, apply_dropout(ffn_forward(c, layer.ffn), drop));
  }
  x = layer_norm(x, params.final_ln.gain, params.final_ln.bias);
  return add_rowwise(matmul(x, params.out_w), params.out_b);
}

Tensor label_smoothing_loss(const Tensor& logits, const std::vector<int>& targets,
                            Scalar weight) {
  if (logits.ndim() != 2) {
    throw ShapeError("label_smoothing_loss: logits must be 2-D");
  }
  const Index len = logits.rows(), v = logits.cols();
  if (static_cast<Index>(targets.size()) != len) {
    throw ShapeError("label_smoothing_loss: one target per logit row required");
  }
  if (weight < 0.0 || weight >= 1.0) {
    throw ContractError("label_smoothing_loss: weight must lie in [0, 1)");
  }

  Index real = 0;
  Vec q = Vec::Zero(len * v);
  MatMap qm(q.data(), len, v);
  const Scalar off_mass = weight / static_cast<Scalar>(v - 1);
  for (Index t = 0; t < len; ++t) {
    const int target = targets[static_cast<std::size_t>(t)];
    if (target == vocab::kPad) continue;
    if (target < 0 || target >= v) {
      throw ContractError("label_smoothing_loss: target id out of range");
    }
    ++real;
    qm.row(t).setConstant(off_mass);
    qm(t, target) = 1.0 - weight;
  }
  if (real == 0) {
    throw ContractError("label_smoothing_loss: every target position is padding");
  }
  Tensor smoothed = Tensor::from_values({len, v}, std::move(q));
  Tensor weighted = hadamard(log_softmax_rows(logits), smoothed);
  return scale(sum_all(weighted), -1.0 / static_cast<Scalar>(real));
}

Index ctc_min_frames(const std::vector<int>& target) {
  Index frames = static_cast<Index>(target.size());
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++frames;
  }
  return frames;
}

std::optional<Tensor> ctc_forward_loss(const Tensor& frame_logits,
                                       const std::vector<int>& target) {
  if (frame_logits.ndim() != 2) {
    throw ShapeError("ctc_forward_loss: frame logits must be [T x vocab]");
  }
  if (target.empty()) throw ContractError("ctc_forward_loss: empty target");
  const Index t_frames = frame_logits.rows();
  const Index v = frame_logits.cols();
  for (int id : target) {
    if (id == vocab::kBlank) {
      throw ContractError("ctc_forward_loss: target contains the blank id");
    }
    if (id < 0 || id >= v) {
      throw ContractError("ctc_forward_loss: target id out of range");
    }
  }
  if (t_frames < ctc_min_frames(target)) return std::nullopt;

  Tensor logp = log_softmax_rows(frame_logits);

  // Blank-interleaved label sequence: blank, y0, blank, y1, ..., blank.
  const Index L = static_cast<Index>(target.size());
  const Index S = 2 * L + 1;
  std::vector<int> ext(static_cast<std::size_t>(S), vocab::kBlank);
  for (Index i = 0; i < L; ++i) {
    ext[static_cast<std::size_t>(2 * i + 1)] = target[static_cast<std::size_t>(i)];
  }

  ConstMatMap lp(logp.values().data(), t_frames, v);
  MatRM alpha = MatRM::Constant(t_frames, S, kNegInf);
  alpha(0, 0) = lp(0, ext[0]);
  if (S > 1) alpha(0, 1) = lp(0, ext[1]);
  for (Index t = 1; t < t_frames; ++t) {
    for (Index s = 0; s < S; ++s) {
      Scalar acc = alpha(t - 1, s);
      if (s >= 1) acc = log_add(acc, alpha(t - 1, s - 1));
      if (s >= 2 && ext[static_cast<std::size_t>(s)] != vocab::kBlank &&
          ext[static_cast<std::size_t>(s)] != ext[static_cast<std::size_t>(s - 2)]) {
        acc = log_add(acc, alpha(t - 1, s - 2));
      }
      if (acc != kNegInf) alpha(t, s) = acc + lp(t, ext[static_cast<std::size_t>(s)]);
    }
  }
  Scalar log_total = alpha(t_frames - 1, S - 1);
  if (S > 1) log_total = log_add(log_total, alpha(t_frames - 1, S - 2));
  if (log_total == kNegInf) return std::nullopt;

  Vec out(1);
  out[0] = -log_total;
  return detail::make_custom_op(
      {1}, std::move(out), {logp},
      [ext = std::move(ext), alpha = std::move(alpha), log_total, t_frames, v,
       S](detail::Node& self) {
        detail::Node* lp_node = self.inputs[0].get();
        if (!lp_node->requires_grad) return;
        const Scalar gout = self.grad[0];
        ConstMatMap lp(lp_node->values.data(), t_frames, v);

        // Suffix recursion; beta excludes the emission at its own frame, so
        // alpha + beta is the log-mass of paths through (t, s).
        MatRM beta = MatRM::Constant(t_frames, S, kNegInf);
        beta(t_frames - 1, S - 1) = 0.0;
        if (S > 1) beta(t_frames - 1, S - 2) = 0.0;
        for (Index t = t_frames - 2; t >= 0; --t) {
          for (Index s = 0; s < S; ++s) {
            Scalar acc = kNegInf;
            for (Index step = 0; step <= 2; ++step) {
              const Index nxt = s + step;
              if (nxt >= S) break;
              if (step == 2 &&
                  (ext[static_cast<std::size_t>(nxt)] == vocab::kBlank ||
                   ext[static_cast<std::size_t>(nxt)] ==
                       ext[static_cast<std::size_t>(s)])) {
                continue;
              }
              if (beta(t + 1, nxt) == kNegInf) continue;
              acc = log_add(acc, lp(t + 1, ext[static_cast<std::size_t>(nxt)]) +
                                     beta(t + 1, nxt));
            }
            beta(t, s) = acc;
          }
        }

        MatMap g(lp_node->ensure_grad().data(), t_frames, v);
        for (Index t = 0; t < t_frames; ++t) {
          for (Index s = 0; s < S; ++s) {
            const Scalar occupancy = alpha(t, s) + beta(t, s) - log_total;
            if (occupancy == kNegInf || std::isnan(occupancy)) continue;
            g(t, ext[static_cast<std::size_t>(s)]) -= gout * std::exp(occupancy);
          }
        }
      });
}

Tensor joint_loss(const Tensor& decoder_loss, const Tensor& ctc_loss, Scalar lambda) {
  if (decoder_loss.size() != 1 || ctc_loss.size() != 1) {
    throw ShapeError("joint_loss: both losses must be scalar");
  }
  if (!all_finite(decoder_loss) || !all_finite(ctc_loss)) {
    throw NumericsError("joint_loss: non-finite component loss");
  }
  if (lambda < 0.0 || lambda > 1.0) {
    throw ContractError("joint_loss: lambda must lie in [0, 1]");
  }
  return add(scale(decoder_loss, 1.0 - lambda), scale(ctc_loss, lambda));
}

std::vector<int> greedy_decode(const Tensor& memory, const DecoderConfig& config,
                               const DecoderParams& params, Index max_len) {
  std::vector<int> tokens{vocab::kSos};
  std::vector<int> hypothesis;
  for (Index step = 0; step < max_len; ++step) {
    Tensor logits = decoder_forward(tokens, memory, config, params);
    ConstMatMap lm = logits.matrix_view();
    Index best = 0;
    lm.row(lm.rows() - 1).maxCoeff(&best);
    const int next = static_cast<int>(best);
    if (next == vocab::kEos) break;
    hypothesis.push_back(next);
    tokens.push_back(next);
  }
  return hypothesis;
}

DecoderParams init_decoder(const DecoderConfig& config, Rng& rng) {
  config.validate();
  DecoderParams params;
  params.embedding = xavier_uniform({config.vocab_size, config.d_model}, rng);
  params.layers.reserve(static_cast<std::size_t>(config.num_layers));
  for (Index i = 0; i < config.num_layers; ++i) {
    DecoderLayerParams layer;
    layer.self_mha =
        init_mha(config.d_model, config.num_heads, config.d_k, config.d_v, rng);
    layer.cross_mha =
        init_mha(config.d_model, config.num_heads, config.d_k, config.d_v, rng);
    layer.ffn = init_ffn(config.d_model, config.d_ff, rng);
    layer.ln_self = init_layer_norm(config.d_model);
    layer.ln_cross = init_layer_norm(config.d_model);
    layer.ln_ffn = init_layer_norm(config.d_model);
    params.layers.push_back(std::move(layer));
  }
  params.final_ln = init_layer_norm(config.d_model);
  params.out_w = xavier_uniform({config.d_model, config.vocab_size}, rng);
  params.out_b = zeros_vector(config.vocab_size);
  return params;
}

}  // namespace attnlab
