#include "motionqa/roi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "motionqa/error.hpp"

namespace motionqa {

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(on.begin(), on.end(), true));
}

namespace {

constexpr std::size_t kBins = 256;

std::size_t bin_of(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return std::min<std::size_t>(static_cast<std::size_t>(c * kBins), kBins - 1);
}

Mask border_band(const Dims& d) {
  Mask m{d, std::vector<bool>(d.count(), false)};
  for (std::size_t z = 0; z < d.nz; ++z)
    for (std::size_t y = 0; y < d.ny; ++y)
      for (std::size_t x = 0; x < d.nx; ++x) {
        const bool edge = y < kBorderBand || x < kBorderBand || y + kBorderBand >= d.ny ||
                          x + kBorderBand >= d.nx;
        m.on[(z * d.ny + y) * d.nx + x] = edge;
      }
  return m;
}

void require_nonempty(const Mask& m, const char* name) {
  if (m.count() == 0) fail(ErrorCode::EmptyRegion, std::string(name) + " region is empty");
}

}  // namespace

std::optional<double> otsu_threshold(std::span<const double> values) {
  std::array<double, kBins> hist{};
  for (double v : values) hist[bin_of(v)] += 1.0;
  const double total = static_cast<double>(values.size());
  double sum_all = 0.0;
  for (std::size_t i = 0; i < kBins; ++i) sum_all += static_cast<double>(i) * hist[i];

  double weight_lo = 0.0, sum_lo = 0.0, best = -1.0;
  std::optional<std::size_t> best_bin;
  for (std::size_t t = 0; t + 1 < kBins; ++t) {
    weight_lo += hist[t];
    sum_lo += static_cast<double>(t) * hist[t];
    const double weight_hi = total - weight_lo;
    if (weight_lo == 0.0 || weight_hi == 0.0) continue;
    const double mean_lo = sum_lo / weight_lo;
    const double mean_hi = (sum_all - sum_lo) / weight_hi;
    const double between = weight_lo * weight_hi * (mean_lo - mean_hi) * (mean_lo - mean_hi);
    if (between > best) {
      best = between;
      best_bin = t;
    }
  }
  if (!best_bin) return std::nullopt;
  // Voxels in bins above best_bin are foreground.
  return static_cast<double>(*best_bin + 1) / kBins;
}

RoiMasks resolve_signal_roi(const Volume& v, const RoiSpec& spec) {
  const Dims& d = v.dims();
  const auto data = v.data();
  RoiMasks out;

  if (spec.kind == RoiSpec::Kind::ExplicitMask) {
    if (!spec.mask) fail(ErrorCode::InvalidArgument, "explicit ROI requires a mask");
    if (spec.mask->dims != d || spec.mask->on.size() != d.count())
      fail(ErrorCode::InvalidArgument, "explicit ROI mask dims differ from the volume");
    out.foreground = *spec.mask;
  } else {
    const auto threshold = otsu_threshold(data);
    if (!threshold) fail(ErrorCode::EmptyRegion, "Otsu cannot split a uniform histogram");
    out.foreground = Mask{d, std::vector<bool>(d.count(), false)};
    for (std::size_t i = 0; i < data.size(); ++i)
      out.foreground.on[i] = std::clamp(data[i], 0.0, 1.0) >= *threshold;
  }
  require_nonempty(out.foreground, "foreground");

  out.background = border_band(d);
  for (std::size_t i = 0; i < d.count(); ++i)
    if (out.foreground.on[i]) out.background.on[i] = false;
  require_nonempty(out.background, "background");
  out.tissue_a = Mask{d, std::vector<bool>(d.count(), false)};
  out.tissue_b = out.tissue_a;
  return out;
}

RoiMasks resolve_roi(const Volume& v, const RoiSpec& spec) {
  const Dims& d = v.dims();
  const auto data = v.data();
  RoiMasks out = resolve_signal_roi(v, spec);

  // 2-means on foreground intensities, centroids seeded at min and max.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (out.foreground.on[i]) {
      lo = std::min(lo, data[i]);
      hi = std::max(hi, data[i]);
    }
  std::vector<bool> bright(d.count(), false);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    double sum_b = 0, sum_d = 0;
    std::size_t n_b = 0, n_d = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!out.foreground.on[i]) continue;
      const bool is_bright = std::abs(data[i] - hi) < std::abs(data[i] - lo);
      if (is_bright != bright[i]) changed = true;
      bright[i] = is_bright;
      if (is_bright) { sum_b += data[i]; ++n_b; }
      else { sum_d += data[i]; ++n_d; }
    }
    if (n_b == 0 || n_d == 0) break;
    hi = sum_b / static_cast<double>(n_b);
    lo = sum_d / static_cast<double>(n_d);
    if (!changed && iter > 0) break;
  }
  for (std::size_t i = 0; i < d.count(); ++i) {
    if (!out.foreground.on[i]) continue;
    (bright[i] ? out.tissue_a : out.tissue_b).on[i] = true;
  }
  require_nonempty(out.tissue_a, "tissue_a");
  require_nonempty(out.tissue_b, "tissue_b");
  return out;
}

}  // namespace motionqa
