#include <gtest/gtest.h>

#include <numeric>

#include "srvnn/model.hpp"
#include "test_support.hpp"

namespace srvnn {
namespace {

using testing::make_instance;
using testing::random_instance;

ModelConfig tiny(Index c, Index z, Index e, Index h, Index m) {
  return {.subcarriers = c, .heads = z, .layers = e, .ffn_hidden = h, .classes = m};
}

TEST(Layout, ParameterCountClosedForm) {
  for (auto cfg : {tiny(16, 2, 2, 64, 3), tiny(4, 1, 1, 3, 2), tiny(7, 3, 4, 5, 6)}) {
    const Index c = cfg.subcarriers, z = cfg.heads, e = cfg.layers, h = cfg.ffn_hidden, m = cfg.classes;
    const Index per_layer = 3 * z * c * c + z * c * c + 2 * c + c * h + h + h * c + c + 2 * c;
    EXPECT_EQ(static_cast<Index>(SrvModel(cfg).num_parameters()), e * per_layer + c * m + m);
  }
}

TEST(Layout, OffsetsFollowDocumentedOrder) {
  const ParameterLayout l(tiny(4, 2, 2, 3, 5));
  EXPECT_EQ(l.layers[0].wq[0], 0);
  EXPECT_EQ(l.layers[0].wk[0], 16);
  EXPECT_EQ(l.layers[0].wv[0], 32);
  EXPECT_EQ(l.layers[0].wq[1], 48);
  EXPECT_EQ(l.layers[0].wu, 96);
  EXPECT_EQ(l.layers[0].ln1_gain, 128);
  EXPECT_EQ(l.layers[0].ln1_bias, 132);
  EXPECT_EQ(l.layers[0].w1, 136);
  EXPECT_EQ(l.layers[0].b1, 148);
  EXPECT_EQ(l.layers[0].w2, 151);
  EXPECT_EQ(l.layers[0].b2, 163);
  EXPECT_EQ(l.layers[0].ln2_gain, 167);
  EXPECT_EQ(l.layers[0].ln2_bias, 171);
  EXPECT_EQ(l.layers[1].wq[0], 175);
  EXPECT_EQ(l.wc, 350);
  EXPECT_EQ(l.bc, 370);
  EXPECT_EQ(l.size, 375);
}

TEST(Init, SeededBoundedAndStructured) {
  auto cfg = tiny(8, 2, 2, 6, 3);
  cfg.init_seed = 42;
  const SrvModel a(cfg), b(cfg);
  EXPECT_EQ(a.parameters(), b.parameters());
  const double s = 1.0 / std::sqrt(8.0);
  for (double v : a.parameters()) EXPECT_TRUE(v == 1.0 || std::abs(v) <= s) << v;
  const auto p = a.view();
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_TRUE((p.ln1_gain(l).array() == 1.0).all());
    EXPECT_TRUE((p.ln2_gain(l).array() == 1.0).all());
    EXPECT_TRUE((p.ln1_bias(l).array() == 0.0).all());
    EXPECT_TRUE((p.b1(l).array() == 0.0).all());
    EXPECT_TRUE((p.b2(l).array() == 0.0).all());
  }
  EXPECT_TRUE((p.bc().array() == 0.0).all());
  cfg.init_seed = 43;
  EXPECT_NE(SrvModel(cfg).parameters(), a.parameters());
}

TEST(Init, RejectsBadShapes) {
  EXPECT_THROW(SrvModel(tiny(0, 1, 1, 1, 2)), Error);
  EXPECT_THROW(SrvModel(tiny(4, 1, 1, 1, 2), std::vector<double>(3)), Error);
}

TEST(PositionalEncoding, SinCosTable) {
  const std::vector<double> ts = {0.0, 0.25, 0.5};
  const Mat pe = positional_encoding(3, 4, ts, 1.0, PositionalEncoding::SinusoidalIndex, 100.0);
  EXPECT_DOUBLE_EQ(pe(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(pe(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(pe(2, 0), std::sin(2.0));
  EXPECT_DOUBLE_EQ(pe(2, 3), std::cos(2.0 / 100.0));
  const Mat pt = positional_encoding(3, 4, ts, 1.0, PositionalEncoding::SinusoidalTime, 100.0);
  EXPECT_DOUBLE_EQ(pt(1, 0), std::sin(25.0));
  EXPECT_DOUBLE_EQ(pt(2, 2), std::sin(50.0 / 100.0));
}

TEST(PositionalEncoding, TimeModeDependsOnlyOnTimestamps) {
  // the same instant gets the same code regardless of the row it lands on
  const std::vector<double> fast = {0.0, 0.1, 0.2, 0.3}, slow = {0.0, 0.2};
  const Mat a = positional_encoding(4, 6, fast, 1.0, PositionalEncoding::SinusoidalTime, 100.0);
  const Mat b = positional_encoding(2, 6, slow, 1.0, PositionalEncoding::SinusoidalTime, 100.0);
  EXPECT_EQ(a.row(2), b.row(1));
}

TEST(Softmax, StableAndNormalised) {
  RowVec logits(3);
  logits << 1000.0, 1001.0, 999.0;
  const RowVec p = softmax(logits);
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
  EXPECT_NEAR(p(1) / p(0), std::exp(1.0), 1e-12);
}

TEST(LayerNorm, ZeroMeanUnitVariance) {
  Mat x(2, 4);
  x << 1, 2, 3, 4, -5, 0, 5, 10;
  const RowVec g = RowVec::Ones(4), b = RowVec::Zero(4);
  const Mat y = layer_norm(x, g, b, 0.0);
  for (Index r = 0; r < 2; ++r) {
    EXPECT_NEAR(y.row(r).mean(), 0.0, 1e-15);
    EXPECT_NEAR(y.row(r).squaredNorm() / 4.0, 1.0, 1e-14);
  }
}

class ForwardOracle : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(ForwardOracle, MatchesStraightLineImplementation) {
  Rng rng(derive_seed(GetParam(), "test", "forward_oracle"));
  const Index c = 2 + static_cast<Index>(uniform_index(rng, 5));
  ModelConfig cfg = tiny(c, 1 + static_cast<Index>(uniform_index(rng, 3)), 1 + static_cast<Index>(uniform_index(rng, 3)),
                         1 + static_cast<Index>(uniform_index(rng, 8)), 2 + static_cast<Index>(uniform_index(rng, 3)));
  cfg.pos_encoding = GetParam() % 2 ? PositionalEncoding::SinusoidalTime : PositionalEncoding::SinusoidalIndex;
  cfg.output_norm = GetParam() % 3 != 0;
  SrvModel model(cfg);
  testing::randomize_parameters(model, GetParam(), 0.7);
  const auto x = random_instance(1 + static_cast<Index>(uniform_index(rng, 9)), c, rng, 0);
  const RowVec p = forward(model, x);
  const auto ref = testing::reference_forward(cfg, model.parameters(), x);
  ASSERT_EQ(static_cast<std::size_t>(p.size()), ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(p(static_cast<Index>(k)), ref[k], 1e-12);
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Seeds, ForwardOracle, ::testing::Range<std::uint64_t>(0, 40));

TEST(Forward, AcceptsAnyLength) {
  SrvModel model(tiny(4, 2, 2, 8, 3));
  Rng rng(1);
  for (Index n : {1, 2, 5, 60, 300}) {
    const RowVec p = forward(model, random_instance(n, 4, rng, 0));
    EXPECT_EQ(p.size(), 3);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_TRUE((p.array() > 0.0).all());
  }
}

TEST(Forward, RowOrderIrrelevantUnderTimeEncoding) {
  // attention is permutation equivariant and max pooling is order free, so
  // shuffling rows together with their timestamps leaves P unchanged
  auto cfg = tiny(6, 2, 2, 8, 4);
  cfg.pos_encoding = PositionalEncoding::SinusoidalTime;
  SrvModel model(cfg);
  testing::randomize_parameters(model, 5, 0.5);
  Rng rng(2);
  const auto x = random_instance(9, 6, rng, 1);
  CsiInstance y = x;
  std::vector<Index> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(perm, rng);
  for (Index i = 0; i < 9; ++i) {
    y.values.row(i) = x.values.row(perm[static_cast<std::size_t>(i)]);
    y.timestamps[static_cast<std::size_t>(i)] = x.timestamps[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  EXPECT_LT((forward(model, x) - forward(model, y)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, DimensionErrors) {
  SrvModel model(tiny(4, 1, 1, 4, 2));
  Rng rng(0);
  try {
    forward(model, random_instance(5, 3, rng, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
  auto x = random_instance(5, 4, rng, 0);
  x.timestamps.pop_back();
  EXPECT_THROW(forward(model, x), Error);
}

TEST(LossAndGrad, RejectsBadBatches) {
  SrvModel model(tiny(4, 1, 1, 4, 2));
  Rng rng(0);
  std::vector<CsiInstance> batch{random_instance(3, 4, rng, 0)};
  batch[0].label.reset();
  try {
    loss_and_grad(model, batch);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnlabeledInstance);
  }
  batch[0].label = 7;
  EXPECT_THROW(loss_and_grad(model, batch), Error);
  EXPECT_THROW(loss_and_grad(model, std::span<const CsiInstance>{}), Error);
}

TEST(LossAndGrad, LossIsMeanCrossEntropy) {
  SrvModel model(tiny(4, 2, 1, 4, 3));
  Rng rng(8);
  const std::vector<CsiInstance> batch{random_instance(4, 4, rng, 0), random_instance(7, 4, rng, 2),
                                       random_instance(2, 4, rng, 1)};
  double expected = 0.0;
  for (const auto& x : batch) expected -= std::log(testing::reference_forward(model.config(), model.parameters(), x)[*x.label]);
  EXPECT_NEAR(loss_and_grad(model, batch).loss, expected / 3.0, 1e-12);
}

}  // namespace
}  // namespace srvnn
