// Copyright 2026 The attnlab Authors
// Command-line surface: gen / train / evaluate / dump-attention /
// analyze / sweep.
//
// Licensed under the Apache License, Version 2.0

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "attnlab/config.hpp"
#include "attnlab/diagnostics.hpp"
#include "attnlab/io.hpp"

namespace fs = std::filesystem;
using namespace attnlab;

namespace {

struct LoadedModel {
  ModelConfig config;
  ModelParams params;
  Index decode_max_len = 24;
};

// Rebuilds a model from a checkpoint: the stored config echo carries the
// architecture, the metadata carries the data-derived dimensions.
LoadedModel model_from_checkpoint(const Checkpoint& ckpt) {
  IniFile ini = IniFile::parse(ckpt.meta.config_text, "<checkpoint config>");
  LoadedModel out;
  out.config = model_config_from(
      ini, ckpt.meta.vocab_size - vocab::kNumSpecial, ckpt.meta.feature_dim);
  out.decode_max_len = ini.get_int("training", "decode_max_len", 24);
  Rng rng(0);
  out.params = init_model(out.config, rng);
  load_into(ckpt, out.params);
  return out;
}

int cmd_gen(const std::string& config_path, const std::string& out_path) {
  IniFile ini = IniFile::parse_file(config_path);
  Dataset data = gen_monotonic_task(task_config_from(ini));
  data.config_text = ini.text();
  save_dataset(data, out_path);
  std::printf("wrote\t%s\t%zu utterances\n", out_path.c_str(),
              data.utterances.size());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& val_path, const std::string& out_dir) {
  IniFile ini = IniFile::parse_file(config_path);
  Dataset data = load_dataset(data_path);
  Dataset val;
  const bool has_val = !val_path.empty();
  if (has_val) val = load_dataset(val_path);

  ModelConfig model = model_config_from(ini, data.config.vocab_size,
                                        data.config.feature_dim);
  LossConfig loss = loss_config_from(ini);
  RunConfig run = run_config_from(ini);
  run.out_dir = out_dir;

  TrainResult result = train(model, loss, data, has_val ? &val : nullptr, run);
  std::printf("trained\t%ld steps\n", result.steps);
  std::printf("final\t%s\n", result.final_checkpoint.c_str());
  if (result.final_val_ter >= 0.0) {
    std::printf("val_ter\t%.6f\n", result.final_val_ter);
  }
  return 0;
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& data_path) {
  LoadedModel model = model_from_checkpoint(load_checkpoint(ckpt_path));
  Dataset data = load_dataset(data_path);
  const Scalar ter =
      evaluate_ter(data, model.config, model.params, model.decode_max_len);
  std::printf("TER\t%.6f\n", ter);
  return 0;
}

int cmd_dump_attention(const std::string& ckpt_path, const std::string& data_path,
                       const std::string& out_path) {
  LoadedModel model = model_from_checkpoint(load_checkpoint(ckpt_path));
  Dataset data = load_dataset(data_path);

  std::vector<AttentionRecord> records;
  for (const Utterance& utt : data.utterances) {
    Tensor features = Tensor::from_values(
        {utt.features.rows(), utt.features.cols()},
        Eigen::Map<const Vec>(utt.features.data(), utt.features.size()));
    EncoderResult enc =
        encoder_forward(features, model.config.encoder, model.params.encoder);
    for (AttentionRecord& rec : enc.records) {
      rec.utterance_id = utt.id;
      records.push_back(std::move(rec));
    }
  }
  AttentionDumpMeta meta;
  meta.d_model = model.config.encoder.d_model;
  meta.num_heads = model.config.encoder.num_heads;
  meta.sa_layers = model.config.encoder.num_sa_layers;
  meta.ff_layers = model.config.encoder.num_ff_layers;
  dump_attention(records, meta, out_path);
  std::printf("wrote\t%s\t%zu records\n", out_path.c_str(), records.size());
  return 0;
}

int cmd_analyze(const std::string& attention_path, const std::string& out_dir) {
  AttentionDump dump = load_attention(attention_path);
  EncoderConfig layout;
  layout.num_sa_layers = dump.meta.sa_layers;
  layout.num_ff_layers = dump.meta.ff_layers;
  layout.num_heads = dump.meta.num_heads;
  layout.d_model = dump.meta.d_model;
  layout.d_v = dump.meta.d_model / std::max<Index>(dump.meta.num_heads, 1);
  layout.d_k = layout.d_v;

  DiagonalityReport report = build_report(dump.records, layout);
  fs::create_directories(out_dir);
  const std::string csv = (fs::path(out_dir) / "report.csv").string();
  const std::string json = (fs::path(out_dir) / "summary.json").string();
  write_report_csv(report, csv);
  write_report_json(report, json);
  std::printf("wrote\t%s\n", csv.c_str());
  std::printf("wrote\t%s\n", json.c_str());
  std::printf("trend_slope\t%.6f\n", report.trend_slope);
  return 0;
}

int cmd_sweep(const std::string& layers_spec, const std::string& config_path,
              const std::string& data_path, const std::string& val_path,
              const std::string& out_dir) {
  IniFile base = IniFile::parse_file(config_path);
  const std::vector<LayerComposition> comps = parse_layer_spec(layers_spec);
  Dataset data = load_dataset(data_path);
  Dataset val;
  const bool has_val = !val_path.empty();
  if (has_val) val = load_dataset(val_path);

  fs::create_directories(out_dir);
  const std::string table_path = (fs::path(out_dir) / "results.tsv").string();
  std::ofstream table(table_path, std::ios::binary);
  if (!table) throw IoError("cannot open " + table_path);

  const std::string header = "total\tsa\tff\tter\tparams\n";
  std::fputs(header.c_str(), stdout);
  table << header;
  for (const LayerComposition& comp : comps) {
    // The effective config for this run is the base file plus the
    // composition override; the combined text is echoed into artifacts.
    std::string text = base.text();
    text += "\n# sweep composition override\n[model]\nsa_layers = " +
            std::to_string(comp.sa) + "\nff_layers = " + std::to_string(comp.ff) +
            "\n";
    IniFile ini = IniFile::parse(text, config_path + "+sweep");

    ModelConfig model = model_config_from(ini, data.config.vocab_size,
                                          data.config.feature_dim);
    LossConfig loss = loss_config_from(ini);
    RunConfig run = run_config_from(ini);
    const std::string comp_name =
        std::to_string(comp.sa) + "SA_" + std::to_string(comp.ff) + "FF";
    run.out_dir = (fs::path(out_dir) / comp_name).string();

    TrainResult result = train(model, loss, data, has_val ? &val : nullptr, run);

    Scalar ter;
    if (has_val) {
      ter = result.final_val_ter;
    } else {
      LoadedModel final_model =
          model_from_checkpoint(load_checkpoint(result.final_checkpoint));
      ter = evaluate_ter(data, final_model.config, final_model.params,
                         final_model.decode_max_len);
    }

    Rng rng(0);
    ModelParams counted = init_model(model, rng);
    char row[128];
    std::snprintf(row, sizeof(row), "%lld\t%lld\t%lld\t%.6f\t%lld\n",
                  static_cast<long long>(comp.sa + comp.ff),
                  static_cast<long long>(comp.sa),
                  static_cast<long long>(comp.ff), ter,
                  static_cast<long long>(parameter_count(counted)));
    std::fputs(row, stdout);
    std::fflush(stdout);
    table << row;
  }
  if (!table) throw IoError("failed writing " + table_path);
  std::printf("wrote\t%s\n", table_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequence-to-sequence transformer lab with hybrid "
               "self-attention / feed-forward encoders"};
  app.require_subcommand(1);

  std::string config_path, data_path, val_path, out_path, ckpt_path;
  std::string attention_path, layers_spec;

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen->add_option("--config", config_path, "Config file with a [task] section")
      ->required();
  gen->add_option("--out", out_path, "Output dataset file")->required();

  CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", config_path, "Config file")->required();
  train_cmd->add_option("--data", data_path, "Training dataset")->required();
  train_cmd->add_option("--val-data", val_path, "Validation dataset");
  train_cmd->add_option("--out", out_path, "Output directory")->required();

  CLI::App* evaluate = app.add_subcommand("evaluate", "Token error rate");
  evaluate->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  evaluate->add_option("--data", data_path, "Dataset file")->required();

  CLI::App* dump = app.add_subcommand("dump-attention",
                                      "Record encoder attention matrices");
  dump->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  dump->add_option("--data", data_path, "Dataset file")->required();
  dump->add_option("--out", out_path, "Output attention dump")->required();

  CLI::App* analyze = app.add_subcommand("analyze", "Diagonality report");
  analyze->add_option("--attention", attention_path, "Attention dump")->required();
  analyze->add_option("--out", out_path, "Output directory")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "Layer-composition sweep");
  sweep->add_option("--layers", layers_spec,
                    "Compositions, e.g. \"4SA,3SA+1FF\" or \"12:12SA,11SA+1FF\"")
      ->required();
  sweep->add_option("--config", config_path, "Base config file")->required();
  sweep->add_option("--data", data_path, "Training dataset")->required();
  sweep->add_option("--val-data", val_path, "Validation dataset");
  sweep->add_option("--out", out_path, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(config_path, out_path);
    if (train_cmd->parsed()) {
      return cmd_train(config_path, data_path, val_path, out_path);
    }
    if (evaluate->parsed()) return cmd_evaluate(ckpt_path, data_path);
    if (dump->parsed()) return cmd_dump_attention(ckpt_path, data_path, out_path);
    if (analyze->parsed()) return cmd_analyze(attention_path, out_path);
    if (sweep->parsed()) {
      return cmd_sweep(layers_spec, config_path, data_path, val_path, out_path);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
