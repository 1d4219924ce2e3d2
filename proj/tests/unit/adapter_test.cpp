#include <gtest/gtest.h>

#include <numeric>

#include "support/gradcheck.hpp"
#include "vihoi/adapter/qformer.hpp"
#include "vihoi/common/error.hpp"

namespace vihoi::adapter {
namespace {

using Md = Matrix<double>;

Md run(const QFormer<double>& q, const Md& e) {
  Tape<double> t(false);
  return t.value(q(t, t.constant(e)));
}

TEST(QFormer, ProjectNormalizeStandardizesRows) {
  ParameterStore<double> s;
  Rng rng(1);
  const auto q = QFormer<double>::make(s, "q.", {16, 32, 1, 4, false}, rng);
  const Md e = nn::normal_init(rng, 8, 16, 3.0);
  Tape<double> t(false);
  const Md z = t.value(q.project_normalize(t, t.constant(e)));
  ASSERT_EQ(z.rows(), 8);
  ASSERT_EQ(z.cols(), 32);
  for (int r = 0; r < 8; ++r) {
    const double mean = z.row(r).mean();
    const double var = (z.row(r).array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-5);
    EXPECT_NEAR(var, 1.0, 1e-5);
  }
  Md dup = e;
  dup.row(5) = dup.row(2);
  Tape<double> t2(false);
  const Md zd = t2.value(q.project_normalize(t2, t2.constant(dup)));
  EXPECT_TRUE(zd.row(5) == zd.row(2));
}

TEST(QFormer, GradientsMatchFiniteDifferences) {
  for (const bool ff : {false, true}) {
    ParameterStore<double> s;
    Rng rng(2);
    const auto q = QFormer<double>::make(s, "q.", {16, 8, 2, 2, ff}, rng);
    auto& e = s.add("input", nn::normal_init(rng, 8, 16, 1.0));
    const Md target = nn::normal_init(rng, 2, 8, 1.0);
    auto build = [&](Tape<double>& t) {
      return nn::mean(t, nn::square(t, nn::sub(t, q(t, t.parameter(e)), t.constant(target))));
    };
    s.zero_grad();
    {
      Tape<double> t;
      t.backward(build(t));
    }
    const auto result = testing::check_gradients(s.all(), [&] {
      Tape<double> t(false);
      return t.scalar(build(t));
    }, 8);
    EXPECT_LT(result.max_rel_error, 1e-4) << "feed_forward=" << ff;

    s.zero_grad();
    {
      Tape<double> t;
      t.backward(nn::mean(t, nn::square(t, q.project_normalize(t, t.parameter(e)))));
    }
    const auto pn = testing::check_gradients({&e}, [&] {
      Tape<double> t(false);
      return t.scalar(nn::mean(t, nn::square(t, q.project_normalize(t, t.parameter(e)))));
    }, 16);
    EXPECT_LT(pn.max_rel_error, 1e-4);
  }
}

TEST(QFormer, EveryParameterReceivesGradient) {
  ParameterStore<float> s;
  Rng rng(3);
  const auto q = QFormer<float>::make(s, "q.", {24, 16, 1, 4, false}, rng);
  const Matrix<float> e = nn::normal_init(rng, 10, 24, 1.0).cast<float>();
  s.zero_grad();
  Tape<float> t;
  t.backward(nn::sum(t, nn::square(t, nn::affine(t, q(t, t.constant(e)), 1.0f, 0.3f))));
  for (const auto* p : s.all()) EXPECT_GT(p->grad.cwiseAbs().maxCoeff(), 0.0f) << p->name;
}

// Softmax over a single key is exactly 1: each layer adds z·Wv·Wo to its
// input before the post-norm.
TEST(QFormer, SingleTokenInputOracle) {
  ParameterStore<double> s;
  Rng rng(4);
  const auto q = QFormer<double>::make(s, "q.", {12, 8, 1, 4, false}, rng);
  const Md e = nn::normal_init(rng, 1, 12, 1.0);

  auto ln = [](const Md& x, const nn::LayerNorm<double>& n) {
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    return Md(((x.array() - mean) / std::sqrt(var + 1e-5)).matrix().cwiseProduct(n.gain->value) + n.bias->value);
  };
  const Md z = ln(e * q.proj.weight->value + q.proj.bias->value, q.proj_norm);
  Md h = q.queries->value;
  for (const auto& layer : q.layers) h = ln(h + z * layer.attn.wv->value * layer.attn.wo->value, layer.norm);
  EXPECT_LT((run(q, e) - h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(QFormer, InvariantToInputRowOrder) {
  ParameterStore<double> s;
  Rng rng(5);
  const auto q = QFormer<double>::make(s, "q.", {16, 16, 1, 4, false}, rng);
  const Md e = nn::normal_init(rng, 20, 16, 1.0);
  const Md base = run(q, e);
  std::vector<int> order(20);
  std::iota(order.begin(), order.end(), 0);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    Md p(20, 16);
    for (int r = 0; r < 20; ++r) p.row(r) = e.row(order[r]);
    worst = std::max(worst, (run(q, p) - base).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(QFormer, ScalingTheInputChangesTheOutput) {
  ParameterStore<double> s;
  Rng rng(6);
  const auto q = QFormer<double>::make(s, "q.", {16, 16, 1, 4, false}, rng);
  const Md e = nn::normal_init(rng, 6, 16, 1.0);
  EXPECT_GT((run(q, 2.0 * e) - run(q, e)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(QFormer, OutputShapeFollowsQueryCount) {
  for (const int k : {1, 2, 4, 8}) {
    ParameterStore<double> s;
    Rng rng(7);
    const auto q = QFormer<double>::make(s, "q.", {16, 32, k, 4, false}, rng);
    for (const int n : {1, 3, 50}) {
      const Md c = run(q, nn::normal_init(rng, n, 16, 1.0));
      EXPECT_EQ(c.rows(), k);
      EXPECT_EQ(c.cols(), 32);
    }
  }
}

TEST(QFormer, Errors) {
  ParameterStore<double> s;
  Rng rng(8);
  const auto q = QFormer<double>::make(s, "q.", {16, 32, 1, 4, false}, rng);
  Tape<double> t(false);
  try {
    q(t, t.constant(Md::Zero(3, 15)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWidthMismatch);
  }
  EXPECT_THROW(q(t, t.constant(Md::Zero(0, 16))), Error);
  EXPECT_THROW(QFormer<double>::make(s, "bad.", {16, 30, 1, 4, false}, rng), Error);
  EXPECT_THROW(QFormer<double>::make(s, "bad2.", {16, 32, 0, 4, false}, rng), Error);
}

TEST(Adapters, IndependentAndDeterministic) {
  ParameterStore<double> s1, s2;
  auto [v1, t1] = make_adapters(s1, "adapter.", 16, 32, 1, 1, 42);
  auto [v2, t2] = make_adapters(s2, "adapter.", 16, 32, 1, 1, 42);
  EXPECT_EQ(s1.checksum(), s2.checksum());
  EXPECT_EQ(v1.config.queries, 1);
  EXPECT_EQ(t1.config.queries, 1);
  EXPECT_NE(s1.find("adapter.visual.proj.weight"), nullptr);
  EXPECT_NE(s1.find("adapter.text.queries"), nullptr);
  const Md& a = v1.proj.weight->value;
  const Md& b = t1.proj.weight->value;
  EXPECT_EQ((a.array() == b.array()).count(), 0);
  EXPECT_EQ((v1.queries->value.array() == t1.queries->value.array()).count(), 0);
  for (const int k : {2, 4, 8}) {
    ParameterStore<float> s;
    auto [v, t] = make_adapters(s, "adapter.", 16, 32, k, 1, 1);
    EXPECT_EQ(v.queries->value.rows(), k);
    EXPECT_EQ(t.queries->value.rows(), 1);
  }
}

TEST(PoolAdapter, BypassesQFormer) {
  ParameterStore<double> s;
  Rng rng(9);
  const auto pool = PoolAdapter<double>::make(s, "pool.", 16, 8, rng);
  const Md e = nn::normal_init(rng, 5, 16, 1.0);
  const std::uint64_t before = qformer_calls();
  Tape<double> t(false);
  const Md c = t.value(pool(t, t.constant(e)));
  EXPECT_EQ(qformer_calls(), before);
  const Md expected = e.colwise().mean() * pool.proj.weight->value + pool.proj.bias->value;
  EXPECT_LT((c - expected).cwiseAbs().maxCoeff(), 1e-12);

  ParameterStore<double> s2;
  const auto q = QFormer<double>::make(s2, "q.", {16, 8, 1, 4, false}, rng);
  run(q, e);
  EXPECT_EQ(qformer_calls(), before + 1);
}

}  // namespace
}  // namespace vihoi::adapter
