// Copyright 2026 The attnlab Authors
// Diagonality metric, report reduction, attention dump format.
//
// Licensed under the Apache License, Version 2.0

#include "attnlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace attnlab {

namespace {

using ordered_json = nlohmann::ordered_json;

Scalar population_std(const std::vector<Scalar>& xs) {
  if (xs.empty()) return 0.0;
  long double mean = 0.0L;
  for (Scalar x : xs) mean += x;
  mean /= static_cast<long double>(xs.size());
  long double var = 0.0L;
  for (Scalar x : xs) {
    const long double d = static_cast<long double>(x) - mean;
    var += d * d;
  }
  var /= static_cast<long double>(xs.size());
  return static_cast<Scalar>(std::sqrt(static_cast<Scalar>(var)));
}

Scalar mean_of(const std::vector<Scalar>& xs) {
  long double total = 0.0L;
  for (Scalar x : xs) total += x;
  return static_cast<Scalar>(total / static_cast<long double>(xs.size()));
}

Scalar least_squares_slope(const std::vector<Scalar>& ys) {
  const Index n = static_cast<Index>(ys.size());
  if (n < 2) return 0.0;
  const Scalar x_mean = static_cast<Scalar>(n - 1) / 2.0;
  Scalar y_mean = 0.0;
  for (Scalar y : ys) y_mean += y;
  y_mean /= static_cast<Scalar>(n);
  Scalar num = 0.0, den = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Scalar dx = static_cast<Scalar>(i) - x_mean;
    num += dx * (ys[static_cast<std::size_t>(i)] - y_mean);
    den += dx * dx;
  }
  return num / den;
}

}  // namespace

Scalar centrality(const Eigen::Ref<const Eigen::RowVectorXd>& row, Index i) {
  const Index n = row.size();
  if (n < 1) throw ContractError("centrality: empty row");
  if (i < 0 || i >= n) throw ContractError("centrality: row index out of range");
  long double total = 0.0L;
  for (Index j = 0; j < n; ++j) {
    if (!(row[j] >= 0.0)) {
      throw ContractError("centrality: negative or NaN attention weight");
    }
    total += static_cast<long double>(row[j]);
  }
  if (std::abs(static_cast<Scalar>(total) - 1.0) > 1e-6) {
    throw ContractError("centrality: row sums to " +
                        std::to_string(static_cast<Scalar>(total)) +
                        ", not a probability vector");
  }
  // A single position is perfectly diagonal; the distance normalizer is 0.
  if (n == 1) return 1.0;
  const long double farthest = static_cast<long double>(std::max(i, n - 1 - i));
  long double expected_distance = 0.0L;
  for (Index j = 0; j < n; ++j) {
    expected_distance +=
        static_cast<long double>(row[j]) * static_cast<long double>(std::abs(i - j));
  }
  return static_cast<Scalar>(1.0L - expected_distance / farthest);
}

Scalar diagonality(const MatRM& matrix) {
  const Index n = matrix.rows();
  if (n == 0) throw ContractError("diagonality: empty matrix");
  if (matrix.cols() != n) {
    throw ContractError("diagonality: attention matrix must be square, got " +
                        std::to_string(n) + "x" + std::to_string(matrix.cols()));
  }
  long double total = 0.0L;
  for (Index i = 0; i < n; ++i) {
    total += static_cast<long double>(centrality(matrix.row(i), i));
  }
  return static_cast<Scalar>(total / static_cast<long double>(n));
}

DiagonalityReport build_report(const std::vector<AttentionRecord>& records,
                               const EncoderConfig& layout) {
  const Index sa = layout.num_sa_layers;
  const Index ff = layout.num_ff_layers;
  const Index h = layout.num_heads;

  // diag[layer][head] over utterances, in record order.
  std::vector<std::vector<std::vector<Scalar>>> diag(
      static_cast<std::size_t>(sa),
      std::vector<std::vector<Scalar>>(static_cast<std::size_t>(h)));
  // Per (layer, utterance) values for the over-utterance layer spread.
  std::map<std::pair<int, std::string>, std::vector<Scalar>> per_utterance;

  for (const AttentionRecord& rec : records) {
    if (rec.layer_index < 0 || rec.layer_index >= sa || rec.head_index < 0 ||
        rec.head_index >= h) {
      throw ContractError("build_report: record (" + std::to_string(rec.layer_index) +
                          ", " + std::to_string(rec.head_index) +
                          ") outside the declared layout");
    }
    const Scalar d = diagonality(rec.matrix);
    diag[static_cast<std::size_t>(rec.layer_index)]
        [static_cast<std::size_t>(rec.head_index)].push_back(d);
    per_utterance[{rec.layer_index, rec.utterance_id}].push_back(d);
  }

  DiagonalityReport report;
  for (Index layer = 0; layer < sa; ++layer) {
    std::vector<Scalar> head_means;
    for (Index head = 0; head < h; ++head) {
      const auto& values =
          diag[static_cast<std::size_t>(layer)][static_cast<std::size_t>(head)];
      if (values.empty()) {
        throw ContractError("build_report: no record for layer " +
                            std::to_string(layer) + " head " + std::to_string(head));
      }
      HeadStat stat;
      stat.layer = static_cast<int>(layer);
      stat.head = static_cast<int>(head);
      stat.mean = mean_of(values);
      stat.stddev = population_std(values);
      stat.count = static_cast<int>(values.size());
      report.head_stats.push_back(stat);
      head_means.push_back(stat.mean);
    }
    report.layer_means.push_back(mean_of(head_means));
    report.layer_std_over_heads.push_back(population_std(head_means));

    std::vector<Scalar> utterance_means;
    for (const auto& [key, values] : per_utterance) {
      if (key.first != static_cast<int>(layer)) continue;
      utterance_means.push_back(mean_of(values));
    }
    report.layer_std_over_utterances.push_back(population_std(utterance_means));
  }

  // Feed-forward layers carry diagonality exactly 1: their implicit
  // attention matrix is the identity.
  for (Index layer = sa; layer < sa + ff; ++layer) {
    HeadStat stat;
    stat.layer = static_cast<int>(layer);
    stat.head = -1;
    stat.mean = 1.0;
    stat.stddev = 0.0;
    stat.count = 0;
    report.head_stats.push_back(stat);
    report.layer_means.push_back(1.0);
    report.layer_std_over_heads.push_back(0.0);
    report.layer_std_over_utterances.push_back(0.0);
  }

  report.trend_slope = least_squares_slope(report.layer_means);
  return report;
}

void write_report_csv(const DiagonalityReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "layer,head,mean_diag,std_diag\n";
  out.precision(12);
  for (const HeadStat& stat : report.head_stats) {
    out << stat.layer << "," << stat.head << "," << stat.mean << "," << stat.stddev
        << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

void write_report_json(const DiagonalityReport& report, const std::string& path) {
  ordered_json j;
  j["layer_means"] = report.layer_means;
  j["trend_slope"] = report.trend_slope;
  j["layer_std_over_utterances"] = report.layer_std_over_utterances;
  j["layer_std_over_heads"] = report.layer_std_over_heads;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

namespace {

struct UtteranceGroup {
  std::string id;
  Index len = 0;
  std::vector<const AttentionRecord*> records;  // (layer, head) order
};

}  // namespace

void dump_attention(const std::vector<AttentionRecord>& records,
                    const AttentionDumpMeta& meta, const std::string& path) {
  const Index per_utterance = meta.sa_layers * meta.num_heads;
  std::vector<UtteranceGroup> groups;
  std::map<std::string, std::size_t> group_of;
  for (const AttentionRecord& rec : records) {
    auto [it, inserted] = group_of.try_emplace(rec.utterance_id, groups.size());
    if (inserted) {
      groups.push_back({rec.utterance_id, rec.matrix.rows(), {}});
    }
    UtteranceGroup& group = groups[it->second];
    if (rec.matrix.rows() != group.len || rec.matrix.cols() != group.len) {
      throw ContractError("dump_attention: matrix sizes disagree within utterance " +
                          rec.utterance_id);
    }
    validate_row_stochastic(rec.matrix);
    group.records.push_back(&rec);
  }
  for (UtteranceGroup& group : groups) {
    if (static_cast<Index>(group.records.size()) != per_utterance) {
      throw ContractError("dump_attention: utterance " + group.id + " has " +
                          std::to_string(group.records.size()) + " records, expected " +
                          std::to_string(per_utterance));
    }
    std::sort(group.records.begin(), group.records.end(),
              [](const AttentionRecord* a, const AttentionRecord* b) {
                return std::tie(a->layer_index, a->head_index) <
                       std::tie(b->layer_index, b->head_index);
              });
  }

  ordered_json header;
  header["format"] = "attnlab-attention";
  header["version"] = 1;
  header["d_m"] = meta.d_model;
  header["heads"] = meta.num_heads;
  header["sa_layers"] = meta.sa_layers;
  header["ff_layers"] = meta.ff_layers;
  ordered_json utts = ordered_json::array();
  for (const UtteranceGroup& group : groups) {
    utts.push_back({{"id", group.id}, {"len", group.len}});
  }
  header["utterances"] = std::move(utts);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << header.dump() << "\n";
  for (const UtteranceGroup& group : groups) {
    for (const AttentionRecord* rec : group.records) {
      out.write(reinterpret_cast<const char*>(rec->matrix.data()),
                static_cast<std::streamsize>(sizeof(Scalar)) * rec->matrix.size());
    }
  }
  if (!out) throw IoError("failed writing " + path);
}

AttentionDump load_attention(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) throw IoError(path + ": missing header");
  ordered_json header;
  try {
    header = ordered_json::parse(header_line);
  } catch (const std::exception& e) {
    throw IoError(path + ": malformed header: " + e.what());
  }
  if (header.value("format", "") != "attnlab-attention") {
    throw IoError(path + ": not an attention dump");
  }
  if (header.value("version", 0) != 1) {
    throw IoError(path + ": unsupported version " +
                  std::to_string(header.value("version", 0)));
  }

  AttentionDump dump;
  dump.meta.d_model = header.at("d_m").get<Index>();
  dump.meta.num_heads = header.at("heads").get<Index>();
  dump.meta.sa_layers = header.at("sa_layers").get<Index>();
  dump.meta.ff_layers = header.at("ff_layers").get<Index>();

  for (const auto& utt : header.at("utterances")) {
    const std::string id = utt.at("id").get<std::string>();
    const Index len = utt.at("len").get<Index>();
    if (len < 1) throw IoError(path + ": non-positive matrix size");
    for (Index layer = 0; layer < dump.meta.sa_layers; ++layer) {
      for (Index head = 0; head < dump.meta.num_heads; ++head) {
        AttentionRecord rec;
        rec.layer_index = static_cast<int>(layer);
        rec.head_index = static_cast<int>(head);
        rec.utterance_id = id;
        rec.matrix.resize(len, len);
        in.read(reinterpret_cast<char*>(rec.matrix.data()),
                static_cast<std::streamsize>(sizeof(Scalar)) * len * len);
        if (!in) throw IoError(path + ": truncated payload");
        try {
          validate_row_stochastic(rec.matrix);
        } catch (const ContractError& e) {
          throw IoError(path + ": corrupted matrix for utterance " + id + ": " +
                        e.what());
        }
        dump.records.push_back(std::move(rec));
      }
    }
  }
  char extra;
  if (in.read(&extra, 1)) throw IoError(path + ": trailing bytes after payload");
  return dump;
}

}  // namespace attnlab
