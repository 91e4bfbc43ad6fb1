// Copyright 2026 The attnlab Authors
// Optimizer and training loop.
//
// Licensed under the Apache License, Version 2.0

#include "attnlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "attnlab/io.hpp"

namespace attnlab {

Scalar noam_lr(long step, const ScheduleConfig& config) {
  if (step < 1) throw ContractError("noam_lr: step must be at least 1");
  if (config.warmup_steps < 1) throw ConfigError("noam_lr: warmup_steps must be >= 1");
  if (config.factor <= 0.0) throw ConfigError("noam_lr: factor must be positive");
  const Scalar s = static_cast<Scalar>(step);
  const Scalar w = static_cast<Scalar>(config.warmup_steps);
  return config.factor / std::sqrt(static_cast<Scalar>(config.d_model)) *
         std::min(1.0 / std::sqrt(s), s / (w * std::sqrt(w)));
}

AdamState init_adam_state(const NamedParams& params) {
  AdamState state;
  state.slots.reserve(params.size());
  for (const auto& [name, tensor] : params) {
    state.slots.push_back({Vec::Zero(tensor.size()), Vec::Zero(tensor.size())});
  }
  return state;
}

void adam_step(NamedParams& params, AdamState& state, Scalar lr,
               const AdamConfig& config) {
  if (state.slots.size() != params.size()) {
    throw ContractError("adam_step: state does not match the parameter registry");
  }
  state.step += 1;
  const Scalar bias1 = 1.0 - std::pow(config.beta1, static_cast<Scalar>(state.step));
  const Scalar bias2 = 1.0 - std::pow(config.beta2, static_cast<Scalar>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [name, tensor] = params[i];
    AdamState::Slot& slot = state.slots[i];
    if (slot.m.size() != tensor.size()) {
      throw ContractError("adam_step: moment shape mismatch for " + name);
    }
    if (tensor.has_grad()) {
      const Vec& g = tensor.grad();
      if (!g.allFinite()) {
        throw NumericsError("adam_step: non-finite gradient for " + name +
                            " at optimizer step " + std::to_string(state.step));
      }
      slot.m = config.beta1 * slot.m + (1.0 - config.beta1) * g;
      slot.v = config.beta2 * slot.v + (1.0 - config.beta2) * g.cwiseProduct(g);
    } else {
      slot.m *= config.beta1;
      slot.v *= config.beta2;
    }
    Vec& values = tensor.mutable_values();
    values.array() -= lr * (slot.m.array() / bias1) /
                      ((slot.v.array() / bias2).sqrt() + config.eps);
  }
}

Scalar clip_grad_norm(NamedParams& params, Scalar max_norm) {
  Scalar total_sq = 0.0;
  for (const auto& [name, tensor] : params) {
    if (tensor.has_grad()) total_sq += tensor.grad().squaredNorm();
  }
  const Scalar norm = std::sqrt(total_sq);
  if (norm > max_norm && norm > 0.0) {
    const Scalar factor = max_norm / norm;
    for (auto& [name, tensor] : params) {
      if (tensor.has_grad()) {
        Tensor t = tensor;
        t.node()->grad *= factor;
      }
    }
  }
  return norm;
}

Checkpoint snapshot(const ModelParams& params, CheckpointMeta meta) {
  Checkpoint checkpoint;
  checkpoint.meta = std::move(meta);
  for (const auto& [name, tensor] : named_parameters(params)) {
    checkpoint.params.emplace_back(name, tensor.detach());
  }
  return checkpoint;
}

Checkpoint average_checkpoints(const std::vector<Checkpoint>& checkpoints) {
  if (checkpoints.empty()) {
    throw ContractError("average_checkpoints: need at least one checkpoint");
  }
  const Checkpoint& first = checkpoints.front();
  for (const Checkpoint& c : checkpoints) {
    if (c.meta.config_hash != first.meta.config_hash) {
      throw ContractError("average_checkpoints: config hashes disagree");
    }
    if (c.params.size() != first.params.size()) {
      throw ContractError("average_checkpoints: parameter sets disagree");
    }
  }
  std::set<std::string> names;
  for (const auto& [name, tensor] : first.params) names.insert(name);
  for (const Checkpoint& c : checkpoints) {
    for (const auto& [name, tensor] : c.params) {
      if (!names.count(name)) {
        throw ContractError("average_checkpoints: unknown parameter " + name);
      }
    }
  }

  Checkpoint mean;
  mean.meta = checkpoints.back().meta;
  const Scalar k = static_cast<Scalar>(checkpoints.size());
  for (const auto& [name, tensor] : first.params) {
    Vec total = Vec::Zero(tensor.size());
    for (const Checkpoint& c : checkpoints) {
      const auto it =
          std::find_if(c.params.begin(), c.params.end(),
                       [&](const auto& p) { return p.first == name; });
      if (it->second.shape() != tensor.shape()) {
        throw ContractError("average_checkpoints: shape mismatch for " + name);
      }
      total += it->second.values();
    }
    mean.params.emplace_back(name, Tensor::from_values(tensor.shape(), total / k));
  }
  return mean;
}

void load_into(const Checkpoint& checkpoint, ModelParams& params) {
  NamedParams registry = named_parameters(params);
  if (registry.size() != checkpoint.params.size()) {
    throw ContractError("load_into: checkpoint does not match the model");
  }
  for (std::size_t i = 0; i < registry.size(); ++i) {
    const auto& [ckpt_name, ckpt_tensor] = checkpoint.params[i];
    auto& [name, tensor] = registry[i];
    if (ckpt_name != name || ckpt_tensor.shape() != tensor.shape()) {
      throw ContractError("load_into: parameter " + ckpt_name +
                          " does not line up with " + name);
    }
    tensor.mutable_values() = ckpt_tensor.values();
  }
}

Index levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<Index> prev(m + 1), curr(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<Index>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    curr[0] = static_cast<Index>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const Index sub_cost = a[i - 1] == b[j - 1] ? 0 : 1;
      curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + sub_cost});
    }
    std::swap(prev, curr);
  }
  return prev[m];
}

Scalar token_error_rate(const std::vector<std::vector<int>>& hyps,
                        const std::vector<std::vector<int>>& refs) {
  if (refs.empty() || hyps.size() != refs.size()) {
    throw ContractError("token_error_rate: need matching non-empty hyp/ref lists");
  }
  Index edits = 0, tokens = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    edits += levenshtein(hyps[i], refs[i]);
    tokens += static_cast<Index>(refs[i].size());
  }
  if (tokens == 0) {
    throw ContractError("token_error_rate: references contain no tokens");
  }
  return static_cast<Scalar>(edits) / static_cast<Scalar>(tokens);
}

void RunConfig::validate() const {
  if (epochs < 1) throw ConfigError("training: epochs must be positive");
  if (batch_size < 1) throw ConfigError("training: batch_size must be positive");
  if (max_steps < 0) throw ConfigError("training: max_steps must be >= 0");
  if (warmup_steps < 1) throw ConfigError("training: warmup_steps must be >= 1");
  if (lr_factor <= 0.0) throw ConfigError("training: lr_factor must be positive");
  if (clip_norm <= 0.0) throw ConfigError("training: clip_norm must be positive");
  if (average_last < 1) throw ConfigError("training: average_last must be >= 1");
  if (val_every < 0) throw ConfigError("training: val_every must be >= 0");
  if (decode_max_len < 1) throw ConfigError("training: decode_max_len must be >= 1");
}

Scalar evaluate_ter(const Dataset& data, const ModelConfig& config,
                    const ModelParams& params, Index decode_max_len) {
  std::vector<std::vector<int>> hyps, refs;
  hyps.reserve(data.utterances.size());
  refs.reserve(data.utterances.size());
  for (const Utterance& utt : data.utterances) {
    const Index frames = utt.features.rows();
    Tensor features = Tensor::from_values(
        {frames, utt.features.cols()},
        Eigen::Map<const Vec>(utt.features.data(), utt.features.size()));
    hyps.push_back(transcribe(features, config, params, decode_max_len));
    refs.push_back(utt.target);
  }
  return token_error_rate(hyps, refs);
}

namespace {

std::vector<int> to_model_ids(const std::vector<int>& task_tokens) {
  std::vector<int> ids;
  ids.reserve(task_tokens.size());
  for (int t : task_tokens) ids.push_back(vocab::token_id(t));
  return ids;
}

Tensor features_tensor(const Utterance& utt) {
  return Tensor::from_values(
      {utt.features.rows(), utt.features.cols()},
      Eigen::Map<const Vec>(utt.features.data(), utt.features.size()));
}

}  // namespace

TrainResult train(const ModelConfig& model_config, const LossConfig& loss_config,
                  const Dataset& train_data, const Dataset* val_data,
                  const RunConfig& run) {
  model_config.validate();
  loss_config.validate();
  run.validate();
  if (train_data.utterances.empty()) {
    throw ContractError("train: empty training dataset");
  }
  namespace fs = std::filesystem;
  fs::create_directories(run.out_dir);

  Rng init_rng = Rng::stream(run.seed, 0);
  Rng shuffle_rng = Rng::stream(run.seed, 1);
  Rng dropout_rng = Rng::stream(run.seed, 2);

  ModelParams params = init_model(model_config, init_rng);
  make_trainable(params);
  NamedParams registry = named_parameters(params);
  AdamState adam = init_adam_state(registry);
  const ScheduleConfig schedule{model_config.encoder.d_model, run.warmup_steps,
                                run.lr_factor};
  const std::string config_hash = fnv1a_hex(run.config_text);

  TrainResult result;
  result.metrics_path = (fs::path(run.out_dir) / "metrics.tsv").string();
  result.validation_path = (fs::path(run.out_dir) / "validation.tsv").string();
  std::ofstream metrics(result.metrics_path, std::ios::binary);
  if (!metrics) throw IoError("cannot open " + result.metrics_path);
  std::ofstream validation;
  if (val_data != nullptr && run.val_every > 0) {
    validation.open(result.validation_path, std::ios::binary);
    if (!validation) throw IoError("cannot open " + result.validation_path);
  }

  std::vector<std::size_t> order(train_data.utterances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<Checkpoint> recent;
  long step = 0;
  bool stopped = false;
  char line[256];

  for (int epoch = 1; epoch <= run.epochs && !stopped; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t batch_start = 0; batch_start < order.size();
         batch_start += static_cast<std::size_t>(run.batch_size)) {
      const std::size_t batch_end = std::min(
          order.size(), batch_start + static_cast<std::size_t>(run.batch_size));
      const Scalar batch_n = static_cast<Scalar>(batch_end - batch_start);

      ++step;
      const Scalar lr = noam_lr(step, schedule);
      for (auto& [name, tensor] : registry) tensor.zero_grad();

      Tensor total;
      Scalar dec_sum = 0.0, ctc_sum = 0.0;
      for (std::size_t b = batch_start; b < batch_end; ++b) {
        const Utterance& utt = train_data.utterances[order[b]];
        LossParts parts;
        try {
          parts = model_loss(features_tensor(utt), to_model_ids(utt.target),
                             model_config, params, loss_config, &dropout_rng);
        } catch (const Error& e) {
          throw NumericsError("train: step " + std::to_string(step) +
                              ", utterance " + utt.id + ": " + e.what());
        }
        dec_sum += parts.decoder_value;
        ctc_sum += parts.ctc_value;
        total = total.defined() ? add(total, parts.total) : parts.total;
      }
      Tensor batch_loss = scale(total, 1.0 / batch_n);
      const Scalar loss_value = batch_loss.item();
      if (!std::isfinite(loss_value)) {
        throw NumericsError("train: diverged with non-finite loss at step " +
                            std::to_string(step));
      }
      backward(batch_loss);
      clip_grad_norm(registry, run.clip_norm);
      adam_step(registry, adam, lr);

      std::snprintf(line, sizeof(line),
                    "%ld\t%d\t%.17g\t%.17g\t%.17g\t%.17g\n", step, epoch, lr,
                    loss_value, dec_sum / batch_n, ctc_sum / batch_n);
      metrics << line;

      if (run.max_steps > 0 && step >= run.max_steps) {
        stopped = true;
        break;
      }
    }

    CheckpointMeta meta;
    meta.epoch = epoch;
    meta.step = step;
    meta.seed = run.seed;
    meta.config_hash = config_hash;
    meta.config_text = run.config_text;
    meta.vocab_size = model_config.vocab_size;
    meta.feature_dim = model_config.frontend.feature_dim;
    Checkpoint ckpt = snapshot(params, meta);

    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch);
    const std::string ckpt_path = (fs::path(run.out_dir) / name).string();
    save_checkpoint(ckpt, ckpt_path);
    result.epoch_checkpoints.push_back(ckpt_path);

    recent.push_back(std::move(ckpt));
    if (static_cast<int>(recent.size()) > run.average_last) {
      recent.erase(recent.begin());
    }

    if (val_data != nullptr && run.val_every > 0 &&
        (epoch % run.val_every == 0 || stopped || epoch == run.epochs)) {
      const Scalar ter =
          evaluate_ter(*val_data, model_config, params, run.decode_max_len);
      std::snprintf(line, sizeof(line), "%d\t%ld\t%.17g\n", epoch, step, ter);
      validation << line;
    }
  }
  metrics.flush();
  if (!metrics) throw IoError("failed writing " + result.metrics_path);

  Checkpoint averaged = average_checkpoints(recent);
  result.final_checkpoint = (fs::path(run.out_dir) / "final.ckpt").string();
  save_checkpoint(averaged, result.final_checkpoint);

  if (val_data != nullptr) {
    load_into(averaged, params);
    result.final_val_ter =
        evaluate_ter(*val_data, model_config, params, run.decode_max_len);
  }
  result.steps = step;
  return result;
}

}  // namespace attnlab
