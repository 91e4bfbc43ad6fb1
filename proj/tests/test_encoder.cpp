// Copyright 2026 The attnlab Authors
// Encoder: front-end, positional encoding, SA/FF layers, stack behavior.
//
// Licensed under the Apache License, Version 2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "attnlab/encoder.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace attnlab;
using testsupport::max_fd_error;
using testsupport::random_tensor;

namespace {

EncoderConfig small_config(Index sa, Index ff) {
  EncoderConfig c;
  c.num_sa_layers = sa;
  c.num_ff_layers = ff;
  c.d_model = 8;
  c.num_heads = 2;
  c.d_k = 4;
  c.d_v = 4;
  c.d_ff = 16;
  c.dropout = 0.0;
  return c;
}

FrontEndConfig small_frontend() { return FrontEndConfig{8, 3}; }

void zero_ffn(FfnParams& f) {
  f.w_hidden.mutable_values().setZero();
  f.b_hidden.mutable_values().setZero();
  f.w_out.mutable_values().setZero();
  f.b_out.mutable_values().setZero();
}

void zero_mha(MhaParams& m) {
  for (HeadParams& h : m.heads) {
    h.w_q.mutable_values().setZero();
    h.w_k.mutable_values().setZero();
    h.w_v.mutable_values().setZero();
  }
  m.w_out.mutable_values().setZero();
}

Index params_in_ffn(const FfnParams& f) {
  return f.w_hidden.size() + f.b_hidden.size() + f.w_out.size() + f.b_out.size();
}

Index params_in_mha(const MhaParams& m) {
  Index total = m.w_out.size();
  for (const HeadParams& h : m.heads) {
    total += h.w_q.size() + h.w_k.size() + h.w_v.size();
  }
  return total;
}

// Plain-loop front-end with per-channel planes, independent of the
// im2col + matmul path.
MatRM naive_front_end(const MatRM& feats, const ConvFrontEndParams& p) {
  auto conv = [](const std::vector<MatRM>& input, const Tensor& w, const Tensor& b) {
    const Index t_in = input[0].rows(), f_in = input[0].cols();
    const Index cin = static_cast<Index>(input.size());
    const Index cout = w.cols();
    const Index t_out = (t_in - 3) / 2 + 1, f_out = (f_in - 3) / 2 + 1;
    std::vector<MatRM> out(static_cast<std::size_t>(cout),
                           MatRM::Zero(t_out, f_out));
    for (Index co = 0; co < cout; ++co) {
      for (Index t = 0; t < t_out; ++t) {
        for (Index f = 0; f < f_out; ++f) {
          Scalar acc = b.values()[co];
          for (Index dt = 0; dt < 3; ++dt) {
            for (Index df = 0; df < 3; ++df) {
              for (Index ci = 0; ci < cin; ++ci) {
                acc += input[static_cast<std::size_t>(ci)](2 * t + dt, 2 * f + df) *
                       w.matrix_view()((dt * 3 + df) * cin + ci, co);
              }
            }
          }
          out[static_cast<std::size_t>(co)](t, f) = std::max(acc, 0.0);
        }
      }
    }
    return out;
  };

  std::vector<MatRM> c1 = conv({feats}, p.conv1_w, p.conv1_b);
  std::vector<MatRM> c2 = conv(c1, p.conv2_w, p.conv2_b);
  const Index t2 = c2[0].rows(), f2 = c2[0].cols();
  MatRM out(t2, p.proj_b.size());
  for (Index t = 0; t < t2; ++t) {
    for (Index d = 0; d < out.cols(); ++d) {
      Scalar acc = p.proj_b.values()[d];
      for (Index f = 0; f < f2; ++f) {
        for (Index c = 0; c < p.channels; ++c) {
          acc += c2[static_cast<std::size_t>(c)](t, f) *
                 p.proj_w.matrix_view()(f * p.channels + c, d);
        }
      }
      out(t, d) = acc;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("positional encoding values and bounds") {
  MatRM pe = positional_encoding(5, 8);
  for (Index i = 0; i < 4; ++i) {
    CHECK(pe(0, 2 * i) == 0.0);
    CHECK(pe(0, 2 * i + 1) == 1.0);
  }
  CHECK(pe(1, 0) == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
  CHECK(pe.maxCoeff() <= 1.0);
  CHECK(pe.minCoeff() >= -1.0);
  CHECK_THROWS_AS(positional_encoding(3, 5), ContractError);
}

TEST_CASE("subsampled lengths match the sliding-window oracle") {
  for (Index n = 7; n <= 64; ++n) {
    CHECK(subsample_len(n) == testsupport::window_count(n));
    CHECK(frontend_output_len(n) ==
          testsupport::window_count(testsupport::window_count(n)));
  }
  CHECK(frontend_output_len(16) == 3);  // 16 -> 7 -> 3
  CHECK(frontend_output_len(7) == 1);   // 7 -> 3 -> 1
}

TEST_CASE("conv front-end matches the plain-loop oracle") {
  Rng rng(21);
  ConvFrontEndParams p = init_front_end(small_frontend(), 8, rng);
  Tensor feats = random_tensor({12, 8}, rng, false);
  Tensor out = conv_front_end(feats, p);
  CHECK(out.rows() == frontend_output_len(12));
  CHECK(out.cols() == 8);

  MatRM expected = naive_front_end(feats.matrix_view(), p);
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) {
      CHECK(out.matrix_view()(i, j) == doctest::Approx(expected(i, j)).epsilon(1e-12));
    }
  }

  CHECK_THROWS_AS(conv_front_end(random_tensor({6, 8}, rng, false), p),
                  ContractError);
}

TEST_CASE("conv front-end gradients") {
  Rng rng(22);
  ConvFrontEndParams p = init_front_end(small_frontend(), 8, rng);
  Tensor feats = random_tensor({9, 8}, rng);
  Tensor w = random_tensor({frontend_output_len(9), 8}, rng, false);
  p.conv1_w.set_requires_grad(true);
  p.conv2_b.set_requires_grad(true);
  p.proj_w.set_requires_grad(true);
  const Scalar err = max_fd_error(
      [&] { return sum_all(hadamard(conv_front_end(feats, p), w)); },
      {feats, p.conv1_w, p.conv2_b, p.proj_w});
  CHECK(err < 1e-6);
}

TEST_CASE("zeroed sublayers reduce both layer kinds to the identity") {
  Rng rng(23);
  EncoderConfig cfg = small_config(1, 1);
  SaLayerParams sa = init_sa_layer(cfg, rng);
  zero_mha(sa.mha);
  zero_ffn(sa.ffn);
  FfLayerParams ff = init_ff_layer(cfg, rng);
  zero_ffn(ff.ffn);

  Tensor x = random_tensor({5, 8}, rng, false);
  SaLayerResult sr = sa_layer_forward(x, sa);
  CHECK(sr.output.values() == x.values());
  CHECK(sr.attn.size() == 2);

  Tensor fr = ff_layer_forward(x, ff);
  CHECK(fr.values() == x.values());
}

TEST_CASE("ff layer is positionwise") {
  Rng rng(24);
  FfLayerParams ff = init_ff_layer(small_config(0, 1), rng);
  Tensor x = random_tensor({6, 8}, rng, false);
  Tensor y = ff_layer_forward(x, ff);

  const std::vector<Index> perm{5, 2, 0, 4, 1, 3};
  Vec permuted(x.size());
  MatMap pm(permuted.data(), 6, 8);
  for (Index i = 0; i < 6; ++i) pm.row(i) = x.matrix_view().row(perm[i]);
  Tensor yp = ff_layer_forward(Tensor::from_values({6, 8}, std::move(permuted)), ff);
  for (Index i = 0; i < 6; ++i) {
    for (Index j = 0; j < 8; ++j) {
      CHECK(yp.matrix_view()(i, j) == y.matrix_view()(perm[i], j));
    }
  }
}

TEST_CASE("single-row ff layer against hand arithmetic") {
  // d_model = 2, d_ff = 2, x = [3, 1]: LN gives [1, -1]; with W_h = I,
  // b_h = 0 the hidden is relu([1, -1]) = [1, 0]; W_o = 2I, b_o = [.5, .5]
  // adds [2.5, .5]; the residual gives [5.5, 1.5].
  FfLayerParams ff;
  ff.ffn.w_hidden = Tensor::matrix({{1, 0}, {0, 1}});
  ff.ffn.b_hidden = Tensor::vector({0, 0});
  ff.ffn.w_out = Tensor::matrix({{2, 0}, {0, 2}});
  ff.ffn.b_out = Tensor::vector({0.5, 0.5});
  ff.ln = init_layer_norm(2);
  Tensor out = ff_layer_forward(Tensor::matrix({{3, 1}}), ff);
  CHECK(out.values()[0] == doctest::Approx(5.5).epsilon(1e-9));
  CHECK(out.values()[1] == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("identity-MHA construction makes SA and FF layers agree") {
  // Identity heads pass the sublayer input through unchanged; collapsing
  // the first layer norm to zero leaves only the shared FFN path, and
  // n = 1 pins the attention matrix to the identity.
  Rng rng(25);
  EncoderConfig cfg = small_config(1, 1);
  SaLayerParams sa = init_sa_layer(cfg, rng);
  sa.mha = identity_mha(cfg.d_model, cfg.num_heads);
  sa.ln_attn.gain.mutable_values().setZero();
  sa.ln_attn.bias.mutable_values().setZero();

  FfLayerParams ff;
  ff.ffn = sa.ffn;
  ff.ln = sa.ln_ffn;

  Tensor x = random_tensor({1, 8}, rng, false);
  SaLayerResult sr = sa_layer_forward(x, sa);
  Tensor fr = ff_layer_forward(x, ff);
  CHECK(sr.attn[0](0, 0) == 1.0);
  for (Index i = 0; i < 8; ++i) {
    CHECK(sr.output.values()[i] == fr.values()[i]);  // bitwise
  }
}

TEST_CASE("encoder with an empty stack is layer norm over the embedded front-end") {
  Rng rng(26);
  EncoderConfig cfg = small_config(0, 0);
  EncoderParams params = init_encoder(cfg, small_frontend(), rng);
  Tensor feats = random_tensor({10, 8}, rng, false);
  EncoderResult result = encoder_forward(feats, cfg, params);
  CHECK(result.records.empty());

  Tensor fe = conv_front_end(feats, params.frontend);
  MatRM pe = positional_encoding(fe.rows(), 8);
  Tensor embedded =
      add(scale(fe, std::sqrt(8.0)),
          Tensor::from_values({fe.rows(), 8},
                              Eigen::Map<const Vec>(pe.data(), fe.size())));
  Tensor expected =
      layer_norm(embedded, params.final_ln.gain, params.final_ln.bias);
  CHECK(result.memory.values() == expected.values());
}

TEST_CASE("encoder record count and order") {
  Rng rng(27);
  EncoderConfig cfg = small_config(2, 1);
  EncoderParams params = init_encoder(cfg, small_frontend(), rng);
  Tensor feats = random_tensor({16, 8}, rng, false);
  EncoderResult result = encoder_forward(feats, cfg, params);
  REQUIRE(result.records.size() == 4);  // 2 layers x 2 heads
  CHECK(result.records[0].layer_index == 0);
  CHECK(result.records[0].head_index == 0);
  CHECK(result.records[1].head_index == 1);
  CHECK(result.records[2].layer_index == 1);
  CHECK(result.memory.rows() == 3);
}

TEST_CASE("encoder equals the manual composition of its layers") {
  Rng rng(28);
  EncoderConfig cfg = small_config(2, 1);
  EncoderParams params = init_encoder(cfg, small_frontend(), rng);
  Tensor feats = random_tensor({14, 8}, rng, false);
  EncoderResult result = encoder_forward(feats, cfg, params);

  Tensor h = conv_front_end(feats, params.frontend);
  MatRM pe = positional_encoding(h.rows(), 8);
  h = add(scale(h, std::sqrt(8.0)),
          Tensor::from_values({h.rows(), 8},
                              Eigen::Map<const Vec>(pe.data(), h.size())));
  h = sa_layer_forward(h, params.sa_layers[0]).output;
  h = sa_layer_forward(h, params.sa_layers[1]).output;
  h = ff_layer_forward(h, params.ff_layers[0]);
  h = layer_norm(h, params.final_ln.gain, params.final_ln.bias);
  CHECK(result.memory.values() == h.values());
}

TEST_CASE("output length depends only on input length") {
  Rng rng(29);
  EncoderConfig cfg = small_config(1, 0);
  EncoderParams params = init_encoder(cfg, small_frontend(), rng);
  for (Index n : {8, 11, 16, 23}) {
    Tensor a = random_tensor({n, 8}, rng, false);
    Tensor b = random_tensor({n, 8}, rng, false, 9.0);
    CHECK(encoder_forward(a, cfg, params).memory.rows() == frontend_output_len(n));
    CHECK(encoder_forward(b, cfg, params).memory.rows() == frontend_output_len(n));
  }
}

TEST_CASE("encoder forward is deterministic without dropout") {
  Rng rng(30);
  EncoderConfig cfg = small_config(2, 1);
  EncoderParams params = init_encoder(cfg, small_frontend(), rng);
  Tensor feats = random_tensor({12, 8}, rng, false);
  EncoderResult a = encoder_forward(feats, cfg, params);
  EncoderResult b = encoder_forward(feats, cfg, params);
  CHECK(a.memory.values() == b.memory.values());
}

TEST_CASE("dropout draws change training-mode outputs but not shapes") {
  Rng rng(31);
  EncoderConfig cfg = small_config(1, 1);
  cfg.dropout = 0.2;
  EncoderParams params = init_encoder(cfg, small_frontend(), rng);
  Tensor feats = random_tensor({12, 8}, rng, false);
  Rng d1(77), d2(78);
  EncoderResult a = encoder_forward(feats, cfg, params, &d1);
  EncoderResult b = encoder_forward(feats, cfg, params, &d2);
  CHECK(a.memory.rows() == b.memory.rows());
  CHECK((a.memory.values() - b.memory.values()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("SA minus FF parameter count matches the closed form") {
  Rng rng(32);
  EncoderConfig cfg = small_config(1, 1);
  SaLayerParams sa = init_sa_layer(cfg, rng);
  FfLayerParams ff = init_ff_layer(cfg, rng);

  const Index sa_count = params_in_mha(sa.mha) + params_in_ffn(sa.ffn) +
                         2 * (cfg.d_model + cfg.d_model);
  const Index ff_count = params_in_ffn(ff.ffn) + (cfg.d_model + cfg.d_model);
  const Index d_h = cfg.num_heads * cfg.d_v;
  const Index expected_delta =
      cfg.num_heads * (2 * cfg.d_model * cfg.d_k + cfg.d_model * cfg.d_v) +
      d_h * cfg.d_model + 2 * cfg.d_model;
  CHECK(sa_count - ff_count == expected_delta);
}

TEST_CASE("encoder gradients flow to every parameter kind") {
  Rng rng(33);
  EncoderConfig cfg = small_config(1, 1);
  EncoderParams params = init_encoder(cfg, small_frontend(), rng);
  Tensor feats = random_tensor({9, 8}, rng);
  params.sa_layers[0].mha.heads[0].w_q.set_requires_grad(true);
  params.sa_layers[0].ln_attn.gain.set_requires_grad(true);
  params.ff_layers[0].ffn.w_hidden.set_requires_grad(true);
  params.final_ln.bias.set_requires_grad(true);
  Tensor w = random_tensor({frontend_output_len(9), 8}, rng, false);
  const Scalar err = max_fd_error(
      [&] {
        return sum_all(hadamard(encoder_forward(feats, cfg, params).memory, w));
      },
      {feats, params.sa_layers[0].mha.heads[0].w_q,
       params.sa_layers[0].ln_attn.gain, params.ff_layers[0].ffn.w_hidden,
       params.final_ln.bias});
  CHECK(err < 1e-5);
}
