// Copyright 2026 The attnlab Authors
// Attention forward paths and mask builders.
//
// Licensed under the Apache License, Version 2.0

#include "attnlab/attention.hpp"

#include <cmath>

#include "attnlab/init.hpp"

namespace attnlab {

void validate_row_stochastic(const MatRM& matrix, Scalar tol) {
  for (Index i = 0; i < matrix.rows(); ++i) {
    Scalar total = 0.0;
    for (Index j = 0; j < matrix.cols(); ++j) {
      const Scalar a = matrix(i, j);
      if (!(a >= 0.0) || a > 1.0 + tol) {
        throw ContractError("attention row " + std::to_string(i) +
                            " has entry outside [0, 1]");
      }
      total += a;
    }
    if (std::abs(total - 1.0) > tol) {
      throw ContractError("attention row " + std::to_string(i) +
                          " sums to " + std::to_string(total));
    }
  }
}

HeadResult attention_head(const Tensor& xq, const Tensor& xk, const Tensor& xv,
                          const HeadParams& params, const Mask* mask,
                          const DropoutCtx& drop) {
  const Index d_k = params.w_q.cols();
  if (params.w_k.cols() != d_k) {
    throw ShapeError("attention_head: W_q and W_k widths disagree");
  }
  if (xk.rows() != xv.rows()) {
    throw ShapeError("attention_head: key/value lengths disagree");
  }
  if (mask != nullptr &&
      (mask->rows() != xq.rows() || mask->cols() != xk.rows())) {
    throw ShapeError("attention_head: mask shape does not match scores");
  }

  Tensor q = matmul(xq, params.w_q);
  Tensor k = matmul(xk, params.w_k);
  Tensor v = matmul(xv, params.w_v);
  Tensor scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<Scalar>(d_k)));
  Tensor attn = mask ? softmax_rows_masked(scores, *mask) : softmax_rows(scores);

  HeadResult result;
  result.attn = attn.matrix_view();  // detached copy, pre-dropout
  Tensor weights = apply_dropout(attn, drop);
  result.output = matmul(weights, v);
  return result;
}

MhaResult multi_head_attention(const Tensor& xq, const Tensor& xk,
                               const Tensor& xv, const MhaParams& params,
                               const Mask* mask, const DropoutCtx& drop) {
  if (params.heads.empty()) {
    throw ContractError("multi_head_attention: no heads");
  }
  std::vector<Tensor> head_outputs;
  head_outputs.reserve(params.heads.size());
  MhaResult result;
  result.attn.reserve(params.heads.size());
  for (const HeadParams& head : params.heads) {
    HeadResult hr = attention_head(xq, xk, xv, head, mask, drop);
    head_outputs.push_back(hr.output);
    result.attn.push_back(std::move(hr.attn));
  }
  result.output = matmul(concat_last_dim(head_outputs), params.w_out);
  return result;
}

Mask causal_mask(Index n) {
  if (n < 1) throw ContractError("causal_mask: n must be at least 1");
  Mask m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) m(i, j) = j <= i;
  }
  return m;
}

Mask padding_mask(const std::vector<Index>& lengths, Index max_len) {
  if (max_len < 1) throw ContractError("padding_mask: max_len must be at least 1");
  Mask m(static_cast<Index>(lengths.size()), max_len);
  for (Index b = 0; b < m.rows(); ++b) {
    const Index len = lengths[static_cast<std::size_t>(b)];
    if (len < 1 || len > max_len) {
      throw ContractError("padding_mask: length " + std::to_string(len) +
                          " outside [1, " + std::to_string(max_len) + "]");
    }
    for (Index j = 0; j < max_len; ++j) m(b, j) = j < len;
  }
  return m;
}

MhaParams init_mha(Index d_model, Index num_heads, Index d_k, Index d_v,
                   Rng& rng) {
  MhaParams params;
  params.heads.reserve(static_cast<std::size_t>(num_heads));
  for (Index h = 0; h < num_heads; ++h) {
    HeadParams head;
    head.w_q = xavier_uniform({d_model, d_k}, rng);
    head.w_k = xavier_uniform({d_model, d_k}, rng);
    head.w_v = xavier_uniform({d_model, d_v}, rng);
    params.heads.push_back(std::move(head));
  }
  params.w_out = xavier_uniform({num_heads * d_v, d_model}, rng);
  return params;
}

MhaParams identity_mha(Index d_model, Index num_heads) {
  if (num_heads < 1 || d_model % num_heads != 0) {
    throw ContractError("identity_mha: d_model must split evenly across heads");
  }
  const Index d_v = d_model / num_heads;
  MhaParams params;
  for (Index h = 0; h < num_heads; ++h) {
    HeadParams head;
    head.w_q = Tensor::zeros({d_model, d_v});
    head.w_k = Tensor::zeros({d_model, d_v});
    Tensor w_v = Tensor::zeros({d_model, d_v});
    MatMap wv = w_v.mutable_matrix_view();
    for (Index c = 0; c < d_v; ++c) wv(h * d_v + c, c) = 1.0;
    head.w_v = w_v;
    params.heads.push_back(std::move(head));
  }
  Tensor w_out = Tensor::zeros({d_model, d_model});
  MatMap wo = w_out.mutable_matrix_view();
  for (Index i = 0; i < d_model; ++i) wo(i, i) = 1.0;
  params.w_out = w_out;
  return params;
}

}  // namespace attnlab
