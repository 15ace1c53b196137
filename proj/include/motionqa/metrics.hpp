#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "motionqa/roi.hpp"
#include "motionqa/volume.hpp"

namespace motionqa {

/// PSNR in dB with an explicit +inf state for identical inputs.
class Psnr {
 public:
  static Psnr infinite() { return Psnr(true, 0.0); }
  static Psnr decibels(double db) { return Psnr(false, db); }

  bool is_infinite() const { return infinite_; }
  /// +inf for the sentinel.
  double value() const;

  bool operator==(const Psnr&) const = default;

 private:
  Psnr(bool inf, double db) : infinite_(inf), db_(db) {}
  bool infinite_;
  double db_;
};

double mean_squared_error(const Volume& a, const Volume& b);
double mean_absolute_error(const Volume& a, const Volume& b);

Psnr psnr(const Volume& pred, const Volume& gt, double data_range = 1.0);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// SSIM of one slice over the valid region of a Gaussian window.
double ssim_slice(std::span<const double> a, std::span<const double> b, std::size_t ny,
                  std::size_t nx, const SsimParams& params = {});

/// Mean of per-slice SSIM. Throws SliceTooSmall when a slice is smaller
/// than the window.
double ssim(const Volume& pred, const Volume& gt, const SsimParams& params = {});

/// mean(foreground) / std(background), sample std.
double snr(const Volume& v, const RoiSpec& roi);
double snr(const Volume& v, const RoiMasks& masks);

/// |mean(tissue_a) - mean(tissue_b)| / std(background).
double cnr(const Volume& v, const RoiSpec& roi);
double cnr(const Volume& v, const RoiMasks& masks);

/// One feature vector per row.
using FeatureSet = Eigen::MatrixXd;

/// Frechet distance between Gaussian fits of two feature sets.
double fid(const FeatureSet& a, const FeatureSet& b);

struct MetricRow {
  std::string volume_id;
  std::string method_label;
  std::optional<Psnr> psnr;
  std::optional<double> ssim;
  std::optional<double> snr;
  std::optional<double> cnr;
  std::optional<double> fid;
  std::optional<double> feature_dist;

  bool operator==(const MetricRow&) const = default;
};

}  // namespace motionqa
