#include <gtest/gtest.h>

#include <cmath>

#include "motionqa/error.hpp"
#include "motionqa/spectral.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace motionqa;
using motionqa::testing::random_volume;

namespace {

double energy(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double energy(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return s;
}

}  // namespace

TEST(Spectral, MatchesDirectDft) {
  for (Dims d : {Dims{2, 6, 5}, Dims{1, 7, 8}, Dims{1, 4, 4}}) {
    const Volume v = random_volume(d, d.ny * 100 + d.nx);
    const KSpaceVolume k = forward_transform(v);
    for (std::size_t z = 0; z < d.nz; ++z) {
      const auto s = v.slice(z);
      std::vector<Complex> img(s.begin(), s.end());
      const auto ref = oracle::centered_dft(img, d.ny, d.nx);
      const auto got = k.slice(z);
      for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_LT(std::abs(got[i] - ref[i]), 1e-12);
    }
  }
}

TEST(Spectral, ConstantSliceHasOnlyCenterBin) {
  const double c = 0.7;
  for (std::size_t n : {8u, 9u}) {
    const Volume v({1, n, n}, std::vector<double>(n * n, c));
    const KSpaceVolume k = forward_transform(v);
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) {
        const Complex expect = (y == n / 2 && x == n / 2) ? Complex(c * n, 0.0) : Complex(0.0, 0.0);
        EXPECT_LT(std::abs(k.at(0, y, x) - expect), 1e-12);
      }
  }
}

TEST(Spectral, ZeroInZeroOut) {
  const KSpaceVolume k = forward_transform(Volume::zeros({2, 4, 6}));
  for (const auto& x : k.data) EXPECT_EQ(x, Complex(0.0, 0.0));
  const Volume back = inverse_transform(k);
  for (double x : back.data()) EXPECT_EQ(x, 0.0);
}

TEST(Spectral, DcOnlySpectrumGivesConstantImage) {
  const std::size_t n = 10;
  const double c = -0.3;
  KSpaceVolume k{{1, n, n}, std::vector<Complex>(n * n), {}, {}};
  k.at(0, n / 2, n / 2) = c * static_cast<double>(n);
  const Volume img = inverse_transform(k);
  for (double x : img.data()) EXPECT_NEAR(x, std::abs(c), 1e-12);
}

TEST(Spectral, RoundtripAndParseval) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Volume v = random_volume({3, 16 + seed, 12 + 2 * seed}, seed);
    const KSpaceVolume k = forward_transform(v);
    EXPECT_NEAR(energy(k.data) / energy(v.data()), 1.0, 1e-9);
    const Volume back = inverse_transform(k);
    for (std::size_t i = 0; i < v.data().size(); ++i) EXPECT_NEAR(back.data()[i], v.data()[i], 1e-10);
  }
}

TEST(Spectral, MetadataCarriedThrough) {
  VolumeMeta m;
  m.patient_id = "abc";
  m.center = "x";
  const Volume v({1, 4, 4}, std::vector<double>(16, 1.0), {2.0, 0.5, 0.5}, m);
  const Volume back = inverse_transform(forward_transform(v));
  EXPECT_EQ(back.meta(), m);
  EXPECT_EQ(back.spacing(), v.spacing());
}

TEST(Spectral, CircularShiftChangesOnlyPhase) {
  const Dims d{1, 12, 10};
  const Volume v = random_volume(d, 3);
  std::vector<double> shifted(d.count());
  for (std::size_t y = 0; y < d.ny; ++y)
    for (std::size_t x = 0; x < d.nx; ++x) shifted[((y + 3) % d.ny) * d.nx + (x + 7) % d.nx] = v.at(0, y, x);
  const auto a = forward_transform(v);
  const auto b = forward_transform(v.with_data(shifted));
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(std::abs(a.data[i]), std::abs(b.data[i]), 1e-9);
}

TEST(FocalFrequencyLoss, ZeroForIdenticalInputs) {
  const Volume v = random_volume({2, 8, 8}, 1);
  EXPECT_EQ(focal_frequency_loss(v, v), 0.0);
}

TEST(FocalFrequencyLoss, AlphaZeroIsMeanSquaredSpectralError) {
  const Volume a = random_volume({2, 8, 6}, 1);
  const Volume b = random_volume({2, 8, 6}, 2);
  const auto fa = forward_transform(a), fb = forward_transform(b);
  double direct = 0.0;
  for (std::size_t i = 0; i < fa.data.size(); ++i) direct += std::norm(fa.data[i] - fb.data[i]);
  direct /= static_cast<double>(fa.data.size());
  EXPECT_NEAR(focal_frequency_loss(a, b, 0.0), direct, 1e-14);
}

TEST(FocalFrequencyLoss, SingleDifferingBin) {
  // Constant slices differ only in the DC bin, by delta * n.
  const std::size_t n = 8;
  const double c = 0.5, delta = 0.25;
  const Volume gt({2, n, n}, std::vector<double>(2 * n * n, c));
  const Volume pred({2, n, n}, std::vector<double>(2 * n * n, c + delta));
  const double d0 = std::pow(delta * n, 2.0);
  const double bins = 2.0 * n * n;
  EXPECT_NEAR(focal_frequency_loss(pred, gt, 1.0), 2.0 * d0 / bins, 1e-12);
}

TEST(FocalFrequencyLoss, SymmetricAndNonNegative) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Volume a = random_volume({1, 9, 7}, s), b = random_volume({1, 9, 7}, s + 100);
    const double ab = focal_frequency_loss(a, b, 1.0);
    EXPECT_GT(ab, 0.0);
    EXPECT_NEAR(ab, focal_frequency_loss(b, a, 1.0), 1e-15);
  }
}

TEST(FocalFrequencyLoss, DimMismatch) {
  try {
    focal_frequency_loss(Volume::zeros({1, 4, 4}), Volume::zeros({1, 4, 5}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimMismatch);
  }
}
