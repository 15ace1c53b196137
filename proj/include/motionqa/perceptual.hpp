#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motionqa/metrics.hpp"
#include "motionqa/tensor.hpp"
#include "motionqa/volume.hpp"

namespace motionqa {

enum class Nonlinearity { Relu, None };
enum class Pooling { None, Max2 };

struct ConvStage {
  std::size_t out_channels = 1;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  Nonlinearity nonlinearity = Nonlinearity::Relu;
  Pooling pool = Pooling::None;

  bool operator==(const ConvStage&) const = default;
};

struct Provenance {
  enum class Kind { Seeded, Loaded, Constructed };
  Kind kind = Kind::Constructed;
  std::uint64_t seed = 0;
  std::string path;
};

struct FeatureMap {
  Tensor3 data;
  std::size_t layer_index = 0;
};

/// A single-channel-input stack of convolution stages with tap points.
///
/// Immutable after construction; safe to share between threads.
class FeatureExtractor {
 public:
  /// Explicit weights, one ConvWeights per stage. Taps are 0-based stage
  /// indices and must be non-empty.
  FeatureExtractor(std::vector<ConvStage> stages, std::vector<std::size_t> taps,
                   std::vector<ConvWeights> weights, Provenance provenance = {});

  /// Fan-in scaled uniform init (bound sqrt(6/fan_in)); weights and biases
  /// are rounded to f32 so a saved copy reloads bit-exactly.
  static FeatureExtractor seeded(std::vector<ConvStage> stages, std::vector<std::size_t> taps,
                                 std::uint64_t seed);

  /// One 1x1 stage with weight 1, bias 0, no nonlinearity.
  static FeatureExtractor identity();

  /// Five 3x3 relu stages, pooling after the first three, taps at the last
  /// two stages.
  static FeatureExtractor deep_tap(std::uint64_t seed);

  static FeatureExtractor load(const std::filesystem::path& stem);
  void save(const std::filesystem::path& stem) const;

  const std::vector<ConvStage>& stages() const { return stages_; }
  const std::vector<std::size_t>& taps() const { return taps_; }
  const std::vector<ConvWeights>& weights() const { return weights_; }
  const Provenance& provenance() const { return provenance_; }

  /// Forward pass over one ny x nx slice; one FeatureMap per tap, in order.
  std::vector<FeatureMap> extract(std::span<const double> slice, std::size_t ny,
                                  std::size_t nx) const;

 private:
  std::vector<ConvStage> stages_;
  std::vector<std::size_t> taps_;
  std::vector<ConvWeights> weights_;
  Provenance provenance_;
};

std::vector<FeatureMap> extract_features(const FeatureExtractor& ex, std::span<const double> slice,
                                         std::size_t ny, std::size_t nx);

/// Per slice and tap, mean absolute feature difference; averaged over taps,
/// then over slices.
double motion_perceptual_loss(const FeatureExtractor& ex, const Volume& pred, const Volume& gt);

/// The same functional used as an evaluation metric.
double feature_distance(const FeatureExtractor& ex, const Volume& a, const Volume& b);

/// One row per slice: the last tap's channels, globally average pooled.
FeatureSet pooled_features(const FeatureExtractor& ex, const Volume& v);

class LossWeights {
 public:
  /// Each weight must lie in (0, 1]. Weights not summing to 1 are rescaled
  /// and the rescale is noted in warning().
  LossWeights(double l1, double ssim, double motion, double focal, double adv);

  static LossWeights defaults() { return {0.25, 0.25, 0.3, 0.15, 0.05}; }

  double l1() const { return l1_; }
  double ssim() const { return ssim_; }
  double motion() const { return motion_; }
  double focal() const { return focal_; }
  double adv() const { return adv_; }
  const std::optional<std::string>& warning() const { return warning_; }

 private:
  double l1_, ssim_, motion_, focal_, adv_;
  std::optional<std::string> warning_;
};

struct LossTerms {
  double l1 = 0.0;
  double ssim_loss = 0.0;  // 1 - SSIM
  double motion = 0.0;
  double focal = 0.0;
  std::optional<double> adv;  // absent counts as 0, weight unchanged
};

inline double ssim_loss_from(double ssim_value) { return 1.0 - ssim_value; }

/// Weighted sum of the terms. Throws NonFiniteTerm for a non-finite or
/// negative term.
double composite_loss(const LossTerms& terms, const LossWeights& w);

}  // namespace motionqa
