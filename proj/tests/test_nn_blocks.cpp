#include <gtest/gtest.h>

#include <cmath>

#include "motionqa/error.hpp"
#include "motionqa/nn_blocks.hpp"
#include "motionqa/rng.hpp"
#include "motionqa/weights_file.hpp"
#include "support/fixtures.hpp"

using namespace motionqa;
using motionqa::testing::TempDir;

namespace {

Tensor3 random_tensor(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed, double lo = -1.0,
                      double hi = 1.0) {
  Rng rng(seed);
  Tensor3 t(c, h, w);
  for (double& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

double max_abs_diff(const Tensor3& a, const Tensor3& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no motionqa::Error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Conv, SamePaddingMatchesDirectSum) {
  const Tensor3 x = random_tensor(2, 6, 5, 1);
  Rng rng(2);
  auto w = ConvWeights::zeros(3, 2, 3);
  for (double& k : w.kernel_data) k = rng.uniform(-1, 1);
  for (double& b : w.bias) b = rng.uniform(-1, 1);
  const Tensor3 y = conv2d_same(x, w);
  ASSERT_TRUE(y.same_shape(Tensor3(3, 6, 5)));
  for (std::size_t o = 0; o < 3; ++o)
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 5; ++j) {
        double s = w.bias[o];
        for (std::size_t c = 0; c < 2; ++c)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int yy = i + ky - 1, xx = j + kx - 1;
              if (yy < 0 || yy >= 6 || xx < 0 || xx >= 5) continue;
              s += w.k(o, c, ky, kx) * x(c, yy, xx);
            }
        EXPECT_NEAR(y(o, i, j), s, 1e-12);
      }
}

TEST(Conv, StrideAndPool) {
  const Tensor3 x = random_tensor(1, 7, 6, 3);
  auto w = ConvWeights::zeros(1, 1, 3);
  w.k(0, 0, 1, 1) = 1.0;
  const Tensor3 y = conv2d_same(x, w, 2);
  EXPECT_EQ(y.height(), 4u);
  EXPECT_EQ(y.width(), 3u);
  const Tensor3 p = max_pool2(x);
  EXPECT_EQ(p.height(), 3u);
  EXPECT_EQ(p.width(), 3u);
  EXPECT_EQ(p(0, 0, 0), std::max({x(0, 0, 0), x(0, 0, 1), x(0, 1, 0), x(0, 1, 1)}));
  EXPECT_EQ(code_of([] { max_pool2(Tensor3(1, 1, 4)); }), ErrorCode::ShapeUnderflow);
}

TEST(Conv, SigmoidStaysInsideOpenInterval) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  for (double v : {-1e6, -800.0, -40.0, 40.0, 800.0, 1e6}) {
    EXPECT_GT(sigmoid(v), 0.0);
    EXPECT_LT(sigmoid(v), 1.0);
  }
}

TEST(Multiscale, IdentityConfiguration) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Tensor3 x = random_tensor(1 + s % 3, 7 + s, 9 + 2 * s, s);
    const Tensor3 y = multiscale_recovery(x, MultiscaleWeights::identity(x.channels()));
    ASSERT_TRUE(y.same_shape(x));
    EXPECT_LT(max_abs_diff(x, y), 1e-12);
  }
}

TEST(Multiscale, ZeroInputZeroOutput) {
  auto w = MultiscaleWeights::seeded(2, 1);
  for (auto* conv : {&w.branch3, &w.branch5, &w.branch7, &w.fuse}) std::fill(conv->bias.begin(), conv->bias.end(), 0.0);
  const Tensor3 y = multiscale_recovery(Tensor3(2, 8, 8), w);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Multiscale, ShapeContractAndUnderflow) {
  const auto w = MultiscaleWeights::seeded(3, 7);
  const Tensor3 x = random_tensor(3, 12, 10, 4);
  EXPECT_TRUE(multiscale_recovery(x, w).same_shape(x));
  EXPECT_EQ(code_of([&] { multiscale_recovery(random_tensor(3, 6, 10, 1), w); }), ErrorCode::ShapeUnderflow);
}

TEST(ChannelAttention, ZeroWeightsHalveInput) {
  const Tensor3 x = random_tensor(32, 5, 6, 1);
  const Tensor3 y = channel_attention(x, ChannelAttentionWeights::zeros(32));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], 0.5 * x.data()[i]);
}

TEST(ChannelAttention, GateStrictlyInsideUnitInterval) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Tensor3 x = random_tensor(16, 4, 4, s, -1e3, 1e3);
    for (double a : channel_attention_gate(x, ChannelAttentionWeights::seeded(16, 4, s))) {
      EXPECT_GT(a, 0.0);
      EXPECT_LT(a, 1.0);
    }
  }
}

TEST(ChannelAttention, PooledVectorScalesLinearly) {
  // With a linear first layer probe: a single hidden unit reading channel 0
  // with weight 1, so the pre-activation is the pooled mean of channel 0.
  auto w = ChannelAttentionWeights::zeros(4, 4);
  w.fc1[0] = 1.0;
  w.fc2 = {1.0, 0.0, 0.0, 0.0};
  const Tensor3 x = random_tensor(4, 5, 5, 3, 0.1, 1.0);
  Tensor3 x3 = x;
  for (double& v : x3.data()) v *= 3.0;
  double mean0 = 0.0;
  for (double v : x.channel(0)) mean0 += v / 25.0;
  const auto g1 = channel_attention_gate(x, w), g3 = channel_attention_gate(x3, w);
  EXPECT_NEAR(std::log(g1[0] / (1 - g1[0])), mean0, 1e-12);
  EXPECT_NEAR(std::log(g3[0] / (1 - g3[0])), 3.0 * mean0, 1e-12);
}

TEST(ChannelAttention, ReductionMustDivideChannels) {
  EXPECT_THROW(ChannelAttentionWeights::zeros(10, 16), Error);
  EXPECT_THROW(ChannelAttentionWeights::zeros(16, 0), Error);
  EXPECT_NO_THROW(ChannelAttentionWeights::zeros(16, 16));
}

TEST(SpatialAttention, ZeroWeightsHalveInput) {
  const Tensor3 x = random_tensor(3, 6, 7, 2);
  const Tensor3 y = spatial_attention(x, SpatialAttentionWeights::zeros());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], 0.5 * x.data()[i]);
}

TEST(SpatialAttention, SingleChannelMaxEqualsMean) {
  // With weight only on the max channel versus only on the mean channel, a
  // one-channel input gives the same mask.
  auto wmax = SpatialAttentionWeights::zeros(), wmean = SpatialAttentionWeights::zeros();
  wmax.conv.k(0, 0, 1, 1) = 0.7;
  wmean.conv.k(0, 1, 1, 1) = 0.7;
  const Tensor3 x = random_tensor(1, 5, 5, 3);
  EXPECT_EQ(spatial_attention_mask(x, wmax), spatial_attention_mask(x, wmean));
}

TEST(SpatialAttention, MaskStrictlyInsideAndUnderflow) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Tensor3 x = random_tensor(4, 6, 6, s, -500, 500);
    const Tensor3 mask = spatial_attention_mask(x, SpatialAttentionWeights::seeded(s));
    for (double m : mask.data()) {
      EXPECT_GT(m, 0.0);
      EXPECT_LT(m, 1.0);
    }
  }
  EXPECT_EQ(code_of([] { spatial_attention(Tensor3(1, 2, 5), SpatialAttentionWeights::zeros()); }),
            ErrorCode::ShapeUnderflow);
}

TEST(Attention, OutputBoundedByInput) {
  const Tensor3 x = random_tensor(8, 6, 6, 5);
  MsaWeights w{ChannelAttentionWeights::seeded(8, 2, 1), SpatialAttentionWeights::seeded(2)};
  for (const Tensor3& y : {channel_attention(x, w.channel), spatial_attention(x, w.spatial), msa_block(x, w)})
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LE(std::abs(y.data()[i]), std::abs(x.data()[i]));
}

TEST(Residual, ZeroWeightsAreSkip) {
  const Tensor3 x = random_tensor(3, 5, 4, 6);
  EXPECT_EQ(residual_block(x, ResidualWeights::zeros(3)), x);
}

TEST(Residual, IdentityKernelsDoubleNonNegativeInput) {
  auto w = ResidualWeights::zeros(2);
  for (std::size_t c = 0; c < 2; ++c) {
    w.first.k(c, c, 1, 1) = 1.0;
    w.second.k(c, c, 1, 1) = 1.0;
  }
  const Tensor3 x = random_tensor(2, 6, 6, 7, 0.0, 1.0);
  const Tensor3 y = residual_block(x, w);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], 2.0 * x.data()[i]);
  EXPECT_EQ(code_of([&] { residual_block(Tensor3(2, 2, 6), w); }), ErrorCode::ShapeUnderflow);
}

TEST(Msa, ZeroWeightsQuarterInput) {
  const Tensor3 x = random_tensor(16, 5, 5, 8);
  const Tensor3 y = msa_block(x, {ChannelAttentionWeights::zeros(16), SpatialAttentionWeights::zeros()});
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], 0.25 * x.data()[i]);
}

TEST(Msa, OrderMatters) {
  const Tensor3 x = random_tensor(8, 6, 6, 9);
  const MsaWeights w{ChannelAttentionWeights::seeded(8, 2, 3), SpatialAttentionWeights::seeded(4)};
  const Tensor3 forward = msa_block(x, w);
  const Tensor3 reversed = channel_attention(spatial_attention(x, w.spatial), w.channel);
  EXPECT_GT(max_abs_diff(forward, reversed), 1e-6);
}

TEST(Blocks, ShapePreservedOverRandomShapes) {
  Rng rng(10);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t c = 1 + rng.below(4) * 2, h = 7 + rng.below(10), w = 7 + rng.below(10);
    const Tensor3 x = random_tensor(c, h, w, trial);
    EXPECT_TRUE(multiscale_recovery(x, MultiscaleWeights::seeded(c, trial)).same_shape(x));
    EXPECT_TRUE(channel_attention(x, ChannelAttentionWeights::seeded(c, 1, trial)).same_shape(x));
    EXPECT_TRUE(spatial_attention(x, SpatialAttentionWeights::seeded(trial)).same_shape(x));
    EXPECT_TRUE(residual_block(x, ResidualWeights::seeded(c, trial)).same_shape(x));
    EXPECT_TRUE(msa_block(x, {ChannelAttentionWeights::seeded(c, 1, trial), SpatialAttentionWeights::seeded(trial)})
                    .same_shape(x));
  }
}

TEST(Blocks, WeightFilesRoundtrip) {
  TempDir dir("blocks");
  const auto ms = MultiscaleWeights::seeded(2, 1);
  const auto ca = ChannelAttentionWeights::seeded(8, 4, 2);
  const auto sa = SpatialAttentionWeights::seeded(3);
  const auto rb = ResidualWeights::seeded(2, 4);
  save_block(ms, dir / "ms");
  save_block(ca, dir / "ca");
  save_block(sa, dir / "sa");
  save_block(rb, dir / "rb");
  const Tensor3 x2 = random_tensor(2, 8, 8, 1), x8 = random_tensor(8, 8, 8, 2);
  EXPECT_EQ(multiscale_recovery(x2, load_multiscale(dir / "ms")), multiscale_recovery(x2, ms));
  EXPECT_EQ(channel_attention(x8, load_channel_attention(dir / "ca")), channel_attention(x8, ca));
  EXPECT_EQ(spatial_attention(x8, load_spatial_attention(dir / "sa")), spatial_attention(x8, sa));
  EXPECT_EQ(residual_block(x2, load_residual(dir / "rb")), residual_block(x2, rb));
  EXPECT_THROW(load_residual(dir / "ms"), Error);
  EXPECT_EQ(load_weight_file(dir / "ca").block_type, "channel_attention");
}
