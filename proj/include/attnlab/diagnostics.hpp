// Copyright 2026 The attnlab Authors
// Attention-diagonality metric and per-head/per-layer reports.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_DIAGNOSTICS_HPP
#define ATTNLAB_DIAGNOSTICS_HPP

#include <string>
#include <vector>

#include "attnlab/attention.hpp"
#include "attnlab/encoder.hpp"

namespace attnlab {

// Centrality of one attention row: 1 minus the mean attention distance
// from the diagonal, normalized by the farthest possible distance. 1 when
// all mass sits on the diagonal, 0 when it sits as far away as possible.
// A single-position row (n == 1) is defined to have centrality 1.
// `i` is the 0-based row position. The row must be a probability vector
// (entries >= 0, sum within 1e-6 of 1).
Scalar centrality(const Eigen::Ref<const Eigen::RowVectorXd>& row, Index i);

// Mean centrality over the rows of a square row-stochastic matrix.
Scalar diagonality(const MatRM& matrix);

struct HeadStat {
  int layer = 0;
  int head = 0;  // -1 marks a feed-forward layer (diagonality 1 by definition)
  Scalar mean = 0.0;
  Scalar stddev = 0.0;  // over utterances
  int count = 0;
};

struct DiagonalityReport {
  std::vector<HeadStat> head_stats;  // (layer, head) order
  std::vector<Scalar> layer_means;   // one per layer, FF layers included as 1
  // Two aggregation choices, labeled separately: spread over utterances of
  // the per-utterance head-mean, and spread over the per-head means.
  std::vector<Scalar> layer_std_over_utterances;
  std::vector<Scalar> layer_std_over_heads;
  Scalar trend_slope = 0.0;  // least squares of layer mean vs layer index
};

// Aggregates per-utterance diagonality into per-(layer, head) mean/std,
// layer means, and the depth trend. Records must cover every
// (layer < num_sa_layers, head < num_heads) pair; feed-forward layers from
// the layout are reported with diagonality exactly 1.
DiagonalityReport build_report(const std::vector<AttentionRecord>& records,
                               const EncoderConfig& layout);

void write_report_csv(const DiagonalityReport& report, const std::string& path);
void write_report_json(const DiagonalityReport& report, const std::string& path);

struct AttentionDumpMeta {
  Index d_model = 0;
  Index num_heads = 0;
  Index sa_layers = 0;
  Index ff_layers = 0;
};

struct AttentionDump {
  AttentionDumpMeta meta;
  std::vector<AttentionRecord> records;
};

// Binary dump: one JSON header line (format, version, dimensions,
// utterance ids and lengths) followed by row-major 64-bit matrices in
// (utterance, layer, head) order. Round-trips bit-exactly.
void dump_attention(const std::vector<AttentionRecord>& records,
                    const AttentionDumpMeta& meta, const std::string& path);

AttentionDump load_attention(const std::string& path);

}  // namespace attnlab

#endif  // ATTNLAB_DIAGNOSTICS_HPP
