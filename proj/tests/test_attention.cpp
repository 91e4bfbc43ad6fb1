// Copyright 2026 The attnlab Authors
// Attention: head semantics, masks, invariants.
//
// Licensed under the Apache License, Version 2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "attnlab/attention.hpp"
#include "support/gradcheck.hpp"

using namespace attnlab;
using testsupport::max_fd_error;
using testsupport::random_tensor;

namespace {

HeadParams random_head(Index d_model, Index d_k, Index d_v, Rng& rng) {
  HeadParams p;
  p.w_q = random_tensor({d_model, d_k}, rng, false);
  p.w_k = random_tensor({d_model, d_k}, rng, false);
  p.w_v = random_tensor({d_model, d_v}, rng, false);
  return p;
}

}  // namespace

TEST_CASE("single position gives the trivial attention matrix") {
  Rng rng(1);
  Tensor x = random_tensor({1, 4}, rng, false);
  HeadParams p = random_head(4, 3, 2, rng);
  HeadResult r = attention_head(x, x, x, p);
  CHECK(r.attn.rows() == 1);
  CHECK(r.attn(0, 0) == 1.0);
  Tensor expected = matmul(x, p.w_v);
  for (Index i = 0; i < expected.size(); ++i) {
    CHECK(r.output.values()[i] == doctest::Approx(expected.values()[i]));
  }
}

TEST_CASE("zero query/key projections give uniform attention") {
  Rng rng(2);
  Tensor x = random_tensor({5, 4}, rng, false);
  HeadParams p = random_head(4, 3, 2, rng);
  p.w_q = Tensor::zeros({4, 3});
  p.w_k = Tensor::zeros({4, 3});
  HeadResult r = attention_head(x, x, x, p);
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 5; ++j) {
      CHECK(r.attn(i, j) == doctest::Approx(0.2).epsilon(1e-12));
    }
  }
}

TEST_CASE("hand-evaluated 2x2 attention") {
  // X = I2, W_q = [2, 0]^T, W_k = [1, 3]^T, W_v = I2, d_k = 1.
  Tensor x = Tensor::matrix({{1, 0}, {0, 1}});
  HeadParams p;
  p.w_q = Tensor::matrix({{2}, {0}});
  p.w_k = Tensor::matrix({{1}, {3}});
  p.w_v = Tensor::matrix({{1, 0}, {0, 1}});
  HeadResult r = attention_head(x, x, x, p);
  // Scores: row 0 = [2, 6], row 1 = [0, 0] (all divided by sqrt(1)).
  const Scalar z = std::exp(2.0) + std::exp(6.0);
  CHECK(r.attn(0, 0) == doctest::Approx(std::exp(2.0) / z).epsilon(1e-12));
  CHECK(r.attn(0, 1) == doctest::Approx(std::exp(6.0) / z).epsilon(1e-12));
  CHECK(r.attn(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.attn(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("score scaling preserves per-row argmax") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor scores = random_tensor({4, 6}, rng, false, 3.0);
    Tensor scaled = scale(scores, 7.5);
    Tensor s1 = softmax_rows(scores);
    Tensor s2 = softmax_rows(scaled);
    for (Index i = 0; i < 4; ++i) {
      Index a1 = 0, a2 = 0;
      s1.matrix_view().row(i).maxCoeff(&a1);
      s2.matrix_view().row(i).maxCoeff(&a2);
      CHECK(a1 == a2);
    }
  }
}

TEST_CASE("doubling keys changes the attention matrix") {
  Rng rng(4);
  Tensor x = random_tensor({4, 4}, rng, false);
  HeadParams p = random_head(4, 3, 3, rng);
  HeadResult base = attention_head(x, x, x, p);
  HeadResult doubled = attention_head(x, scale(x, 2.0), x, p);
  CHECK((base.attn - doubled.attn).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("permuting keys and values together permutes attention columns") {
  Rng rng(5);
  Tensor xq = random_tensor({3, 4}, rng, false);
  Tensor xk = random_tensor({5, 4}, rng, false);
  HeadParams p = random_head(4, 3, 2, rng);
  HeadResult base = attention_head(xq, xk, xk, p);

  const std::vector<Index> perm{3, 0, 4, 1, 2};
  Vec permuted(xk.size());
  MatMap pm(permuted.data(), 5, 4);
  for (Index i = 0; i < 5; ++i) pm.row(i) = xk.matrix_view().row(perm[i]);
  Tensor xkp = Tensor::from_values({5, 4}, std::move(permuted));
  HeadResult shuffled = attention_head(xq, xkp, xkp, p);

  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 5; ++j) {
      CHECK(shuffled.attn(i, j) == doctest::Approx(base.attn(i, perm[j])).epsilon(1e-12));
    }
    for (Index c = 0; c < 2; ++c) {
      CHECK(shuffled.output.matrix_view()(i, c) ==
            doctest::Approx(base.output.matrix_view()(i, c)).epsilon(1e-9));
    }
  }
}

TEST_CASE("attention matrices are row-stochastic") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x = random_tensor({6, 8}, rng, false, 4.0);
    MhaParams p = init_mha(8, 2, 4, 4, rng);
    MhaResult r = multi_head_attention(x, x, x, p);
    for (const MatRM& attn : r.attn) {
      validate_row_stochastic(attn, 1e-9);
    }
  }
}

TEST_CASE("single-head MHA with identity output matrix equals the head") {
  Rng rng(7);
  Tensor x = random_tensor({4, 4}, rng, false);
  MhaParams mha;
  mha.heads.push_back(random_head(4, 3, 4, rng));
  Tensor eye = Tensor::zeros({4, 4});
  for (Index i = 0; i < 4; ++i) eye.mutable_matrix_view()(i, i) = 1.0;
  mha.w_out = eye;
  MhaResult combined = multi_head_attention(x, x, x, mha);
  HeadResult single = attention_head(x, x, x, mha.heads[0]);
  CHECK(combined.output.rows() == 4);
  CHECK(combined.output.cols() == 4);
  for (Index i = 0; i < combined.output.size(); ++i) {
    CHECK(combined.output.values()[i] ==
          doctest::Approx(single.output.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("identity MHA reproduces its value input exactly when attention is identity") {
  Rng rng(8);
  // n = 1 forces the attention matrix to the 1x1 identity.
  Tensor x = random_tensor({1, 8}, rng, false);
  MhaParams p = identity_mha(8, 4);
  MhaResult r = multi_head_attention(x, x, x, p);
  for (Index i = 0; i < 8; ++i) {
    CHECK(r.output.values()[i] == x.values()[i]);  // bitwise
  }
  CHECK(r.attn.size() == 4);
  for (const MatRM& attn : r.attn) CHECK(attn(0, 0) == 1.0);
}

TEST_CASE("masks") {
  Mask one = causal_mask(1);
  CHECK(one(0, 0));

  Mask three = causal_mask(3);
  CHECK(three(1, 0));
  CHECK(three(1, 1));
  CHECK_FALSE(three(1, 2));

  Mask pad = padding_mask({2}, 3);
  CHECK(pad.rows() == 1);
  CHECK(pad(0, 0));
  CHECK(pad(0, 1));
  CHECK_FALSE(pad(0, 2));

  CHECK_THROWS_AS(padding_mask({4}, 3), ContractError);
  CHECK_THROWS_AS(causal_mask(0), ContractError);
}

TEST_CASE("masked positions carry exactly zero attention weight") {
  Rng rng(9);
  Tensor x = random_tensor({4, 4}, rng, false, 5.0);
  HeadParams p = random_head(4, 2, 2, rng);
  Mask m = causal_mask(4);
  HeadResult r = attention_head(x, x, x, p, &m);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = i + 1; j < 4; ++j) {
      CHECK(r.attn(i, j) == 0.0);
    }
    CHECK(std::abs(r.attn.row(i).sum() - 1.0) < 1e-12);
  }

  Mask blocked = m;
  blocked.row(2).setConstant(false);
  CHECK_THROWS_AS(attention_head(x, x, x, p, &blocked), ContractError);
}

TEST_CASE("attention head gradients") {
  Rng rng(10);
  Tensor xq = random_tensor({3, 4}, rng);
  Tensor xk = random_tensor({4, 4}, rng);
  HeadParams p;
  p.w_q = random_tensor({4, 2}, rng);
  p.w_k = random_tensor({4, 2}, rng);
  p.w_v = random_tensor({4, 2}, rng);
  Tensor w = random_tensor({3, 2}, rng, false);
  const Scalar err = max_fd_error(
      [&] {
        HeadResult r = attention_head(xq, xk, xk, p);
        return sum_all(hadamard(r.output, w));
      },
      {xq, xk, p.w_q, p.w_k, p.w_v});
  CHECK(err < 1e-6);
}

TEST_CASE("attention dropout perturbs training output only") {
  Rng rng(11);
  Tensor x = random_tensor({4, 8}, rng, false);
  MhaParams p = init_mha(8, 2, 4, 4, rng);

  MhaResult eval1 = multi_head_attention(x, x, x, p);
  MhaResult eval2 = multi_head_attention(x, x, x, p);
  CHECK(eval1.output.values() == eval2.output.values());

  Rng drop_rng(123);
  DropoutCtx drop{0.5, &drop_rng};
  MhaResult trained = multi_head_attention(x, x, x, p, nullptr, drop);
  CHECK((trained.output.values() - eval1.output.values()).cwiseAbs().maxCoeff() >
        1e-9);
  // Records are taken before dropout, so they stay row-stochastic.
  for (const MatRM& attn : trained.attn) validate_row_stochastic(attn, 1e-9);
}
