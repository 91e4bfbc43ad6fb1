// Copyright 2026 The attnlab Authors
// Config parsing.
//
// Licensed under the Apache License, Version 2.0

#include "attnlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace attnlab {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

IniFile IniFile::parse(std::string text, const std::string& source) {
  IniFile ini;
  ini.text_ = std::move(text);
  ini.source_ = source;
  std::istringstream in(ini.text_);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']') {
        throw ConfigError(source + ":" + std::to_string(lineno) +
                          ": unterminated section header");
      }
      section = trim(stripped.substr(1, stripped.size() - 2));
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    }
    ini.sections_[section][key] = value;
  }
  return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

const std::string* IniFile::find(const std::string& section,
                                 const std::string& key) const {
  const auto sit = sections_.find(section);
  if (sit == sections_.end()) return nullptr;
  const auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return nullptr;
  return &kit->second;
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string IniFile::get_string(const std::string& section, const std::string& key,
                                const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v ? *v : fallback;
}

long IniFile::get_int(const std::string& section, const std::string& key,
                      long fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw ConfigError(source_ + ": [" + section + "] " + key +
                      ": not an integer: '" + *v + "'");
  }
  return out;
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double out = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(source_ + ": [" + section + "] " + key +
                      ": not a number: '" + *v + "'");
  }
}

std::uint64_t IniFile::get_uint64(const std::string& section, const std::string& key,
                                  std::uint64_t fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw ConfigError(source_ + ": [" + section + "] " + key +
                      ": not an unsigned integer: '" + *v + "'");
  }
  return out;
}

ModelConfig model_config_from(const IniFile& ini, Index task_vocab_size,
                              Index feature_dim) {
  ModelConfig config;
  config.encoder.num_sa_layers = ini.get_int("model", "sa_layers", 4);
  config.encoder.num_ff_layers = ini.get_int("model", "ff_layers", 0);
  config.encoder.d_model = ini.get_int("model", "d_m", 64);
  config.encoder.num_heads = ini.get_int("model", "heads", 4);
  config.encoder.d_k = ini.get_int("model", "d_k", 16);
  config.encoder.d_v = ini.get_int("model", "d_v", 16);
  config.encoder.d_ff = ini.get_int("model", "d_ff", 256);
  config.encoder.dropout = ini.get_double("model", "dropout", 0.1);
  config.frontend.channels = ini.get_int("model", "conv_channels", 256);
  config.frontend.feature_dim = feature_dim;
  config.decoder_layers = ini.get_int("model", "decoder_layers", 2);
  config.vocab_size = task_vocab_size + vocab::kNumSpecial;
  config.validate();
  return config;
}

LossConfig loss_config_from(const IniFile& ini) {
  LossConfig config;
  config.lambda = ini.get_double("loss", "lambda", 0.3);
  config.smoothing_weight = ini.get_double("loss", "smoothing", 0.1);
  config.validate();
  return config;
}

RunConfig run_config_from(const IniFile& ini) {
  RunConfig run;
  run.seed = ini.get_uint64("training", "seed", 1);
  run.epochs = static_cast<int>(ini.get_int("training", "epochs", 10));
  run.batch_size = static_cast<int>(ini.get_int("training", "batch_size", 8));
  run.max_steps = ini.get_int("training", "max_steps", 0);
  run.warmup_steps = ini.get_int("training", "warmup_steps", 400);
  run.lr_factor = ini.get_double("training", "lr_factor", 1.0);
  run.clip_norm = ini.get_double("training", "clip_norm", 5.0);
  run.average_last = static_cast<int>(ini.get_int("training", "average_last", 5));
  run.val_every = static_cast<int>(ini.get_int("training", "val_every", 1));
  run.decode_max_len = ini.get_int("training", "decode_max_len", 24);
  run.config_text = ini.text();
  run.validate();
  return run;
}

SyntheticTaskConfig task_config_from(const IniFile& ini) {
  SyntheticTaskConfig config;
  config.vocab_size = ini.get_int("task", "vocab_size", 16);
  config.min_len = ini.get_int("task", "min_len", 2);
  config.max_len = ini.get_int("task", "max_len", 12);
  config.upsample = ini.get_int("task", "upsample", 4);
  config.feature_dim = ini.get_int("task", "feature_dim", 8);
  config.noise_std = ini.get_double("task", "noise_std", 0.1);
  config.seed = ini.get_uint64("task", "seed", 7);
  config.utterance_seed = ini.get_uint64("task", "utterance_seed", 0);
  config.count = ini.get_int("task", "count", 100);
  config.validate();
  return config;
}

std::vector<LayerComposition> parse_layer_spec(const std::string& spec) {
  std::string body = spec;
  Index pinned_total = -1;
  const std::size_t colon = body.find(':');
  if (colon != std::string::npos) {
    const std::string head = trim(body.substr(0, colon));
    long total = 0;
    const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), total);
    if (ec != std::errc{} || ptr != head.data() + head.size() || total < 1) {
      throw ConfigError("layer spec: bad total prefix '" + head + "'");
    }
    pinned_total = total;
    body = body.substr(colon + 1);
  }

  auto parse_count = [](const std::string& item, std::size_t& pos) -> Index {
    std::size_t start = pos;
    while (pos < item.size() && std::isdigit(static_cast<unsigned char>(item[pos]))) {
      ++pos;
    }
    if (pos == start) {
      throw ConfigError("layer spec: expected a count in '" + item + "'");
    }
    return std::stol(item.substr(start, pos - start));
  };
  auto expect = [](const std::string& item, std::size_t& pos, const char* word) {
    for (const char* c = word; *c; ++c, ++pos) {
      if (pos >= item.size() ||
          std::toupper(static_cast<unsigned char>(item[pos])) != *c) {
        throw ConfigError("layer spec: expected '" + std::string(word) + "' in '" +
                          item + "'");
      }
    }
  };

  std::vector<LayerComposition> out;
  std::istringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    LayerComposition comp;
    std::size_t pos = 0;
    comp.sa = parse_count(item, pos);
    expect(item, pos, "SA");
    if (pos < item.size()) {
      if (item[pos] != '+') {
        throw ConfigError("layer spec: expected '+' in '" + item + "'");
      }
      ++pos;
      comp.ff = parse_count(item, pos);
      expect(item, pos, "FF");
    }
    if (pos != item.size()) {
      throw ConfigError("layer spec: trailing characters in '" + item + "'");
    }
    if (pinned_total >= 0 && comp.sa + comp.ff != pinned_total) {
      throw ConfigError("layer spec: '" + item + "' does not total " +
                        std::to_string(pinned_total) + " layers");
    }
    out.push_back(comp);
  }
  if (out.empty()) throw ConfigError("layer spec: no compositions given");
  return out;
}

}  // namespace attnlab
