// Copyright 2026 The attnlab Authors
// Model assembly.
//
// Licensed under the Apache License, Version 2.0

#include "attnlab/model.hpp"

#include "attnlab/init.hpp"

namespace attnlab {

DecoderConfig ModelConfig::decoder_config() const {
  DecoderConfig dc;
  dc.num_layers = decoder_layers;
  dc.vocab_size = vocab_size;
  dc.d_model = encoder.d_model;
  dc.num_heads = encoder.num_heads;
  dc.d_k = encoder.d_k;
  dc.d_v = encoder.d_v;
  dc.d_ff = encoder.d_ff;
  dc.dropout = encoder.dropout;
  return dc;
}

void ModelConfig::validate() const {
  encoder.validate();
  decoder_config().validate();
  if (frontend.feature_dim < 7) {
    throw ConfigError("model: feature_dim must be at least 7");
  }
}

ModelParams init_model(const ModelConfig& config, Rng& rng) {
  config.validate();
  ModelParams params;
  params.encoder = init_encoder(config.encoder, config.frontend, rng);
  params.decoder = init_decoder(config.decoder_config(), rng);
  params.ctc_w = xavier_uniform({config.encoder.d_model, config.vocab_size}, rng);
  params.ctc_b = zeros_vector(config.vocab_size);
  return params;
}

namespace {

using Named = std::vector<std::pair<std::string, Tensor>>;

void add_mha(Named& out, const std::string& prefix, const MhaParams& mha) {
  for (std::size_t h = 0; h < mha.heads.size(); ++h) {
    const std::string hp = prefix + ".h" + std::to_string(h);
    out.emplace_back(hp + ".wq", mha.heads[h].w_q);
    out.emplace_back(hp + ".wk", mha.heads[h].w_k);
    out.emplace_back(hp + ".wv", mha.heads[h].w_v);
  }
  out.emplace_back(prefix + ".wout", mha.w_out);
}

void add_ffn(Named& out, const std::string& prefix, const FfnParams& ffn) {
  out.emplace_back(prefix + ".wh", ffn.w_hidden);
  out.emplace_back(prefix + ".bh", ffn.b_hidden);
  out.emplace_back(prefix + ".wo", ffn.w_out);
  out.emplace_back(prefix + ".bo", ffn.b_out);
}

void add_ln(Named& out, const std::string& prefix, const LayerNormParams& ln) {
  out.emplace_back(prefix + ".g", ln.gain);
  out.emplace_back(prefix + ".b", ln.bias);
}

}  // namespace

Named named_parameters(const ModelParams& params) {
  Named out;
  const ConvFrontEndParams& fe = params.encoder.frontend;
  out.emplace_back("frontend.conv1.w", fe.conv1_w);
  out.emplace_back("frontend.conv1.b", fe.conv1_b);
  out.emplace_back("frontend.conv2.w", fe.conv2_w);
  out.emplace_back("frontend.conv2.b", fe.conv2_b);
  out.emplace_back("frontend.proj.w", fe.proj_w);
  out.emplace_back("frontend.proj.b", fe.proj_b);

  for (std::size_t i = 0; i < params.encoder.sa_layers.size(); ++i) {
    const SaLayerParams& layer = params.encoder.sa_layers[i];
    const std::string lp = "encoder.sa" + std::to_string(i);
    add_mha(out, lp + ".mha", layer.mha);
    add_ffn(out, lp + ".ffn", layer.ffn);
    add_ln(out, lp + ".ln1", layer.ln_attn);
    add_ln(out, lp + ".ln2", layer.ln_ffn);
  }
  for (std::size_t i = 0; i < params.encoder.ff_layers.size(); ++i) {
    const FfLayerParams& layer = params.encoder.ff_layers[i];
    const std::string lp = "encoder.ff" + std::to_string(i);
    add_ffn(out, lp + ".ffn", layer.ffn);
    add_ln(out, lp + ".ln", layer.ln);
  }
  add_ln(out, "encoder.final_ln", params.encoder.final_ln);

  out.emplace_back("decoder.embed", params.decoder.embedding);
  for (std::size_t i = 0; i < params.decoder.layers.size(); ++i) {
    const DecoderLayerParams& layer = params.decoder.layers[i];
    const std::string lp = "decoder.l" + std::to_string(i);
    add_mha(out, lp + ".self", layer.self_mha);
    add_mha(out, lp + ".cross", layer.cross_mha);
    add_ffn(out, lp + ".ffn", layer.ffn);
    add_ln(out, lp + ".ln1", layer.ln_self);
    add_ln(out, lp + ".ln2", layer.ln_cross);
    add_ln(out, lp + ".ln3", layer.ln_ffn);
  }
  add_ln(out, "decoder.final_ln", params.decoder.final_ln);
  out.emplace_back("decoder.out.w", params.decoder.out_w);
  out.emplace_back("decoder.out.b", params.decoder.out_b);

  out.emplace_back("ctc.w", params.ctc_w);
  out.emplace_back("ctc.b", params.ctc_b);
  return out;
}

Index parameter_count(const ModelParams& params) {
  Index total = 0;
  for (const auto& [name, tensor] : named_parameters(params)) total += tensor.size();
  return total;
}

void make_trainable(ModelParams& params) {
  for (auto& [name, tensor] : named_parameters(params)) {
    Tensor t = tensor;
    t.set_requires_grad(true);
  }
}

LossParts model_loss(const Tensor& features, const std::vector<int>& target_ids,
                     const ModelConfig& config, const ModelParams& params,
                     const LossConfig& loss, Rng* dropout_rng) {
  loss.validate();
  if (target_ids.empty()) {
    throw ContractError("model_loss: empty target sequence");
  }
  EncoderResult enc = encoder_forward(features, config.encoder, params.encoder,
                                      dropout_rng);

  std::vector<int> decoder_in{vocab::kSos};
  decoder_in.insert(decoder_in.end(), target_ids.begin(), target_ids.end());
  std::vector<int> decoder_out(target_ids);
  decoder_out.push_back(vocab::kEos);

  Tensor logits = decoder_forward(decoder_in, enc.memory, config.decoder_config(),
                                  params.decoder, dropout_rng);
  Tensor dec_loss = label_smoothing_loss(logits, decoder_out, loss.smoothing_weight);

  LossParts parts;
  parts.decoder_value = dec_loss.item();
  if (loss.lambda == 0.0) {
    parts.total = dec_loss;
    return parts;
  }

  Tensor ctc_logits = add_rowwise(matmul(enc.memory, params.ctc_w), params.ctc_b);
  std::optional<Tensor> ctc = ctc_forward_loss(ctc_logits, target_ids);
  if (!ctc.has_value()) {
    throw NumericsError(
        "model_loss: no CTC alignment, encoder emits " +
        std::to_string(enc.memory.rows()) + " frames for a target needing " +
        std::to_string(ctc_min_frames(target_ids)));
  }
  parts.ctc_value = ctc->item();
  parts.total = joint_loss(dec_loss, *ctc, loss.lambda);
  return parts;
}

std::vector<int> transcribe(const Tensor& features, const ModelConfig& config,
                            const ModelParams& params, Index max_len) {
  EncoderResult enc = encoder_forward(features, config.encoder, params.encoder);
  std::vector<int> ids =
      greedy_decode(enc.memory, config.decoder_config(), params.decoder, max_len);
  std::vector<int> tokens;
  tokens.reserve(ids.size());
  for (int id : ids) {
    if (id >= vocab::kNumSpecial) tokens.push_back(vocab::task_token(id));
  }
  return tokens;
}

}  // namespace attnlab
