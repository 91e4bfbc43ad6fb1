// Copyright 2026 The attnlab Authors
// Binary file formats.
//
// Licensed under the Apache License, Version 2.0

#include "attnlab/io.hpp"

#include <fstream>

#include <json.hpp>

namespace attnlab {

namespace {

using ordered_json = nlohmann::ordered_json;

void write_doubles(std::ofstream& out, const Scalar* data, Index count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(sizeof(Scalar)) * count);
}

void read_doubles(std::ifstream& in, Scalar* data, Index count,
                  const std::string& path) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(sizeof(Scalar)) * count);
  if (!in) throw IoError(path + ": truncated payload");
}

ordered_json read_header(std::ifstream& in, const std::string& path,
                         const std::string& format) {
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": missing header");
  ordered_json header;
  try {
    header = ordered_json::parse(line);
  } catch (const std::exception& e) {
    throw IoError(path + ": malformed header: " + e.what());
  }
  if (header.value("format", "") != format) {
    throw IoError(path + ": expected a " + format + " file");
  }
  if (header.value("version", 0) != 1) {
    throw IoError(path + ": unsupported version " +
                  std::to_string(header.value("version", 0)));
  }
  return header;
}

void expect_eof(std::ifstream& in, const std::string& path) {
  char extra;
  if (in.read(&extra, 1)) throw IoError(path + ": trailing bytes after payload");
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path) {
  ordered_json header;
  header["format"] = "attnlab-dataset";
  header["version"] = 1;
  header["config"] = dataset.config_text;
  header["task"] = {{"vocab_size", dataset.config.vocab_size},
                    {"min_len", dataset.config.min_len},
                    {"max_len", dataset.config.max_len},
                    {"upsample", dataset.config.upsample},
                    {"feature_dim", dataset.config.feature_dim},
                    {"noise_std", dataset.config.noise_std},
                    {"seed", dataset.config.seed},
                    {"utterance_seed", dataset.config.utterance_seed},
                    {"count", dataset.config.count}};
  header["count"] = dataset.utterances.size();
  ordered_json utts = ordered_json::array();
  for (const Utterance& utt : dataset.utterances) {
    utts.push_back({{"id", utt.id},
                    {"frames", utt.features.rows()},
                    {"target", utt.target}});
  }
  header["utterances"] = std::move(utts);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << header.dump() << "\n";
  for (const Utterance& utt : dataset.utterances) {
    write_doubles(out, utt.features.data(), utt.features.size());
  }
  if (!out) throw IoError("failed writing " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const ordered_json header = read_header(in, path, "attnlab-dataset");

  Dataset dataset;
  dataset.config_text = header.at("config").get<std::string>();
  const ordered_json& task = header.at("task");
  dataset.config.vocab_size = task.at("vocab_size").get<Index>();
  dataset.config.min_len = task.at("min_len").get<Index>();
  dataset.config.max_len = task.at("max_len").get<Index>();
  dataset.config.upsample = task.at("upsample").get<Index>();
  dataset.config.feature_dim = task.at("feature_dim").get<Index>();
  dataset.config.noise_std = task.at("noise_std").get<Scalar>();
  dataset.config.seed = task.at("seed").get<std::uint64_t>();
  dataset.config.utterance_seed = task.at("utterance_seed").get<std::uint64_t>();
  dataset.config.count = task.at("count").get<Index>();

  const Index feature_dim = dataset.config.feature_dim;
  for (const auto& utt_header : header.at("utterances")) {
    Utterance utt;
    utt.id = utt_header.at("id").get<std::string>();
    const Index frames = utt_header.at("frames").get<Index>();
    if (frames < 1) throw IoError(path + ": non-positive frame count");
    utt.target = utt_header.at("target").get<std::vector<int>>();
    for (int t : utt.target) {
      if (t < 0 || t >= dataset.config.vocab_size) {
        throw IoError(path + ": target token outside the task vocabulary");
      }
    }
    utt.features.resize(frames, feature_dim);
    read_doubles(in, utt.features.data(), utt.features.size(), path);
    dataset.utterances.push_back(std::move(utt));
  }
  if (static_cast<Index>(dataset.utterances.size()) !=
      header.at("count").get<Index>()) {
    throw IoError(path + ": utterance count disagrees with header");
  }
  expect_eof(in, path);
  return dataset;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  ordered_json header;
  header["format"] = "attnlab-checkpoint";
  header["version"] = 1;
  header["meta"] = {{"epoch", checkpoint.meta.epoch},
                    {"step", checkpoint.meta.step},
                    {"seed", checkpoint.meta.seed},
                    {"config_hash", checkpoint.meta.config_hash},
                    {"config", checkpoint.meta.config_text},
                    {"vocab_size", checkpoint.meta.vocab_size},
                    {"feature_dim", checkpoint.meta.feature_dim}};
  ordered_json params = ordered_json::array();
  for (const auto& [name, tensor] : checkpoint.params) {
    params.push_back({{"name", name}, {"shape", tensor.shape()}});
  }
  header["params"] = std::move(params);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << header.dump() << "\n";
  for (const auto& [name, tensor] : checkpoint.params) {
    write_doubles(out, tensor.values().data(), tensor.size());
  }
  if (!out) throw IoError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const ordered_json header = read_header(in, path, "attnlab-checkpoint");

  Checkpoint checkpoint;
  const ordered_json& meta = header.at("meta");
  checkpoint.meta.epoch = meta.at("epoch").get<int>();
  checkpoint.meta.step = meta.at("step").get<long>();
  checkpoint.meta.seed = meta.at("seed").get<std::uint64_t>();
  checkpoint.meta.config_hash = meta.at("config_hash").get<std::string>();
  checkpoint.meta.config_text = meta.at("config").get<std::string>();
  checkpoint.meta.vocab_size = meta.at("vocab_size").get<Index>();
  checkpoint.meta.feature_dim = meta.at("feature_dim").get<Index>();

  for (const auto& param : header.at("params")) {
    const std::string name = param.at("name").get<std::string>();
    const std::vector<Index> shape = param.at("shape").get<std::vector<Index>>();
    Index count = 1;
    for (Index d : shape) {
      if (d < 1) throw IoError(path + ": bad shape for parameter " + name);
      count *= d;
    }
    Vec values(count);
    read_doubles(in, values.data(), count, path);
    checkpoint.params.emplace_back(
        name, Tensor::from_values(shape, std::move(values)));
  }
  expect_eof(in, path);
  return checkpoint;
}

}  // namespace attnlab
