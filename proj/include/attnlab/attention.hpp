// Copyright 2026 The attnlab Authors
// Scaled dot-product attention heads and multi-head attention.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_ATTENTION_HPP
#define ATTNLAB_ATTENTION_HPP

#include <optional>
#include <string>
#include <vector>

#include "attnlab/tensor.hpp"

namespace attnlab {

// Projections of one attention head. No bias terms: the head computes
// softmax(Q K^T / sqrt(d_k)) V with Q = x W_q, K = x W_k, V = x W_v.
struct HeadParams {
  Tensor w_q;  // [d_model, d_k]
  Tensor w_k;  // [d_model, d_k]
  Tensor w_v;  // [d_model, d_v]
};

struct MhaParams {
  std::vector<HeadParams> heads;
  Tensor w_out;  // [h * d_v, d_model]

  Index num_heads() const { return static_cast<Index>(heads.size()); }
};

// One recorded attention matrix: row-stochastic, detached from the graph,
// tagged with its place in the stack.
struct AttentionRecord {
  int layer_index = 0;
  int head_index = 0;
  MatRM matrix;
  std::string utterance_id;
};

// Throws ContractError unless every row is non-negative and sums to 1
// within `tol`.
void validate_row_stochastic(const MatRM& matrix, Scalar tol = 1e-9);

struct HeadResult {
  Tensor output;  // [n, d_v]
  MatRM attn;     // [n, m], post-softmax, pre-dropout
};

struct MhaResult {
  Tensor output;            // [n, d_model]
  std::vector<MatRM> attn;  // one matrix per head, head order
};

// `mask`, when present, marks allowed (query, key) pairs; a fully masked
// query row violates the contract. Attention weights are recorded after
// the softmax and before dropout.
HeadResult attention_head(const Tensor& xq, const Tensor& xk, const Tensor& xv,
                          const HeadParams& params, const Mask* mask = nullptr,
                          const DropoutCtx& drop = {});

MhaResult multi_head_attention(const Tensor& xq, const Tensor& xk,
                               const Tensor& xv, const MhaParams& params,
                               const Mask* mask = nullptr,
                               const DropoutCtx& drop = {});

// Allows key j for query i iff j <= i.
Mask causal_mask(Index n);

// Row b allows key positions j < lengths[b]; the standard batch padding
// mask over keys.
Mask padding_mask(const std::vector<Index>& lengths, Index max_len);

MhaParams init_mha(Index d_model, Index num_heads, Index d_k, Index d_v,
                   Rng& rng);

// Parameterization whose multi-head output equals xv whenever the
// attention matrix is the identity: per-head value projections select
// consecutive d_v-column blocks and the combining matrix is the identity.
MhaParams identity_mha(Index d_model, Index num_heads);

}  // namespace attnlab

#endif  // ATTNLAB_ATTENTION_HPP
