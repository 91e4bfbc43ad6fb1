// Copyright 2026 The attnlab Authors
// Key = value config files and typed loaders.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_CONFIG_HPP
#define ATTNLAB_CONFIG_HPP

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "attnlab/dataset.hpp"
#include "attnlab/model.hpp"
#include "attnlab/training.hpp"

namespace attnlab {

// One self-describing text file: [section] headers, key = value lines,
// '#' comments. The raw bytes are preserved for byte-exact echoing into
// run artifacts.
class IniFile {
 public:
  static IniFile parse(std::string text, const std::string& source = "<string>");
  static IniFile parse_file(const std::string& path);

  const std::string& text() const { return text_; }

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  long get_int(const std::string& section, const std::string& key,
               long fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  std::uint64_t get_uint64(const std::string& section, const std::string& key,
                           std::uint64_t fallback) const;

 private:
  std::string text_;
  std::string source_;
  std::map<std::string, std::map<std::string, std::string>> sections_;

  const std::string* find(const std::string& section, const std::string& key) const;
};

// Typed views over the config file. Model vocabulary and feature dim come
// from the dataset, not the file, so one config drives any generated data.
ModelConfig model_config_from(const IniFile& ini, Index task_vocab_size,
                              Index feature_dim);
LossConfig loss_config_from(const IniFile& ini);
RunConfig run_config_from(const IniFile& ini);
SyntheticTaskConfig task_config_from(const IniFile& ini);

struct LayerComposition {
  Index sa = 0;
  Index ff = 0;
};

// Comma-separated composition list, e.g. "4SA,3SA+1FF" or
// "12:12SA,11SA+1FF". A leading "<total>:" pins the total layer count of
// every entry.
std::vector<LayerComposition> parse_layer_spec(const std::string& spec);

}  // namespace attnlab

#endif  // ATTNLAB_CONFIG_HPP
