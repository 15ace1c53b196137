#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "motionqa/volume.hpp"

namespace motionqa {

/// Boolean voxel mask with the same layout as a Volume.
struct Mask {
  Dims dims;
  std::vector<bool> on;

  std::size_t count() const;
  bool operator==(const Mask&) const = default;
};

struct RoiSpec {
  enum class Kind { ExplicitMask, Auto };

  Kind kind = Kind::Auto;
  std::optional<Mask> mask;

  static RoiSpec automatic() { return {}; }
  static RoiSpec explicit_mask(Mask m) { return {Kind::ExplicitMask, std::move(m)}; }
};

struct RoiMasks {
  Mask foreground;
  Mask tissue_a;  // brighter foreground cluster
  Mask tissue_b;
  Mask background;
};

/// Width of the in-plane border band used as background.
inline constexpr std::size_t kBorderBand = 5;

/// Otsu threshold over a 256-bin histogram of [0, 1] intensities. Returns
/// std::nullopt when the histogram cannot be split (a single occupied bin).
std::optional<double> otsu_threshold(std::span<const double> values);

/// Resolves the foreground, two tissue clusters and the background.
///
/// Auto mode thresholds with Otsu; explicit mode takes the supplied mask as
/// foreground. In both cases the background is the outermost kBorderBand rows
/// and columns of every slice minus the foreground, and the tissues come from
/// a 2-means split of foreground intensities seeded at their extremes.
/// Throws EmptyRegion when any mask ends up empty, and InvalidArgument for an
/// explicit spec with a missing or mis-sized mask.
RoiMasks resolve_roi(const Volume& v, const RoiSpec& spec);

/// Foreground and background only, as resolve_roi; the tissue masks are left
/// empty. Enough for SNR, and works on a uniform foreground.
RoiMasks resolve_signal_roi(const Volume& v, const RoiSpec& spec);

}  // namespace motionqa
