#include <gtest/gtest.h>

#include "support/gradcheck.hpp"
#include "vihoi/nn/adam.hpp"
#include "vihoi/nn/layers.hpp"
#include "vihoi/nn/ops.hpp"

namespace vihoi::nn {
namespace {

using Md = Matrix<double>;

Md random_matrix(Rng& rng, int r, int c) { return normal_init(rng, r, c, 1.0); }

// Runs `build` on a fresh tape, backpropagates, then finite-differences.
double grad_error(ParameterStore<double>& store, const std::function<Var(Tape<double>&)>& build) {
  store.zero_grad();
  {
    Tape<double> tape;
    tape.backward(build(tape));
  }
  auto loss = [&] {
    Tape<double> tape(false);
    return tape.scalar(build(tape));
  };
  return testing::check_gradients(store.all(), loss, 8).max_rel_error;
}

TEST(NnOps, ElementwiseAndMatmulGradients) {
  Rng rng(1);
  ParameterStore<double> s;
  auto& a = s.add("a", random_matrix(rng, 4, 5));
  auto& b = s.add("b", random_matrix(rng, 5, 3));
  auto& c = s.add("c", random_matrix(rng, 4, 3));
  auto& r = s.add("r", random_matrix(rng, 1, 3));
  const double err = grad_error(s, [&](Tape<double>& t) {
    Var x = matmul(t, t.parameter(a), t.parameter(b));
    x = add_row(t, mul(t, x, t.parameter(c)), t.parameter(r));
    Var y = matmul(t, matmul_nt(t, t.parameter(c), x), x);
    Var z = concat_rows<double>(t, std::vector<Var>{sigmoid(t, y), tanh(t, slice_rows(t, x, 1, 2))});
    z = mul_row(t, gelu(t, silu(t, z)), transpose(t, slice_cols(t, transpose(t, x), 0, 1)));
    z = sub(t, z, slice_rows(t, concat_rows<double>(t, std::vector<Var>{x, x}), 0, 6));
    return mean(t, square(t, z));
  });
  EXPECT_LT(err, 1e-6);
}

TEST(NnOps, NormalizationAndSoftmaxGradients) {
  Rng rng(2);
  ParameterStore<double> s;
  auto& x = s.add("x", random_matrix(rng, 3, 6));
  auto& g = s.add("g", random_matrix(rng, 1, 6));
  auto& b = s.add("b", random_matrix(rng, 1, 6));
  auto& w = s.add("w", random_matrix(rng, 6, 6));
  const double err = grad_error(s, [&](Tape<double>& t) {
    Var h = layer_norm(t, t.parameter(x), t.parameter(g), t.parameter(b));
    Var p = softmax_rows(t, matmul(t, h, t.parameter(w)));
    Var n = l2_normalize_rows(t, add(t, p, log_softmax_rows(t, h)));
    Var col = slice_cols(t, n, 2, 1);
    return add(t, sum(t, mul_col(t, n, col)), mean(t, mean_rows(t, square(t, n))));
  });
  EXPECT_LT(err, 1e-6);
}

TEST(NnOps, GatherAndConcatColsGradients) {
  Rng rng(3);
  ParameterStore<double> s;
  auto& table = s.add("table", random_matrix(rng, 7, 4));
  auto& other = s.add("other", random_matrix(rng, 3, 2));
  const std::vector<int> ids = {2, 5, 2};
  const double err = grad_error(s, [&](Tape<double>& t) {
    Var e = gather_rows(t, t.parameter(table), ids);
    Var c = concat_cols<double>(t, std::vector<Var>{e, t.parameter(other)});
    return add(t, mean_row_sq_norm(t, relu(t, affine(t, c, 1.5, 0.1))), mean(t, mean_rows(t, c)));
  });
  EXPECT_LT(err, 1e-6);
}

TEST(NnLayers, TransformerBlockGradientsWithMask) {
  Rng rng(4);
  ParameterStore<double> s;
  auto block = TransformerBlock<double>::make(s, "blk", 8, 2, 16, rng);
  auto& x = s.add("x", random_matrix(rng, 5, 8));
  Md mask = Md::Zero(1, 5);
  mask(0, 4) = -1e9;
  const double err = grad_error(s, [&](Tape<double>& t) { return mean(t, square(t, block(t, t.parameter(x), &mask))); });
  EXPECT_LT(err, 1e-5);
}

TEST(NnLayers, MaskedKeysDoNotInfluenceOutputs) {
  Rng rng(5);
  ParameterStore<double> s;
  auto attn = MultiHeadAttention<double>::make(s, "attn", 8, 2, rng);
  Md q = random_matrix(rng, 2, 8);
  Md kv = random_matrix(rng, 4, 8);
  Md kv2 = kv;
  kv2.row(3).setConstant(100.0);
  Md mask = Md::Zero(1, 4);
  mask(0, 3) = -1e9;
  Tape<double> t(false);
  const Md a = t.value(attn(t, t.constant(q), t.constant(kv), &mask));
  const Md b = t.value(attn(t, t.constant(q), t.constant(kv2), &mask));
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NnAdam, MinimizesQuadraticAndRoundTripsState) {
  ParameterStore<float> s;
  auto& p = s.add("p", Matrix<float>::Constant(1, 3, 5.0f));
  Adam<float> opt(s.all(), AdamConfig{.lr = 0.1, .clip_norm = 0.0});
  for (int i = 0; i < 300; ++i) {
    opt.zero_grad();
    Tape<float> t;
    t.backward(mean_row_sq_norm(t, t.parameter(p)));
    opt.step();
  }
  EXPECT_LT(p.value.cwiseAbs().maxCoeff(), 0.05f);

  io::Archive ar;
  opt.save(ar, "optim.");
  s.save(ar, "params.");
  ParameterStore<float> s2;
  s2.add("p", Matrix<float>::Zero(1, 3));
  s2.load(ar, "params.");
  Adam<float> opt2(s2.all(), AdamConfig{.lr = 0.1, .clip_norm = 0.0});
  opt2.load(ar, "optim.");
  EXPECT_EQ(opt2.steps(), 300);
  EXPECT_EQ(s.checksum(), s2.checksum());
}

TEST(NnAdam, ClipsGlobalNorm) {
  ParameterStore<double> s;
  auto& p = s.add("p", Md::Zero(1, 2));
  Adam<double> opt(s.all(), AdamConfig{.lr = 1.0, .clip_norm = 1.0});
  p.grad << 30.0, 40.0;
  EXPECT_DOUBLE_EQ(opt.step(), 50.0);
}

}  // namespace
}  // namespace vihoi::nn
