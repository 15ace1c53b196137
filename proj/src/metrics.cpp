#include "motionqa/metrics.hpp"

#include <cmath>
#include <limits>

#include "motionqa/error.hpp"

namespace motionqa {

double Psnr::value() const {
  return infinite_ ? std::numeric_limits<double>::infinity() : db_;
}

double mean_squared_error(const Volume& a, const Volume& b) {
  require_same_dims(a, b, "mse");
  double sum = 0.0;
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) sum += (x[i] - y[i]) * (x[i] - y[i]);
  return sum / static_cast<double>(x.size());
}

double mean_absolute_error(const Volume& a, const Volume& b) {
  require_same_dims(a, b, "mae");
  double sum = 0.0;
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) sum += std::abs(x[i] - y[i]);
  return sum / static_cast<double>(x.size());
}

Psnr psnr(const Volume& pred, const Volume& gt, double data_range) {
  if (!(data_range > 0.0)) fail(ErrorCode::InvalidArgument, "data_range must be > 0");
  const double mse = mean_squared_error(pred, gt);
  if (mse == 0.0) return Psnr::infinite();
  return Psnr::decibels(10.0 * std::log10(data_range * data_range / mse));
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    w[static_cast<std::size_t>(i)] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (double& x : w) x /= sum;
  return w;
}

// Separable valid-mode filtering of a ny x nx image.
std::vector<double> filter_valid(std::span<const double> img, std::size_t ny, std::size_t nx,
                                 const std::vector<double>& w) {
  const std::size_t k = w.size();
  const std::size_t oy = ny - k + 1, ox = nx - k + 1;
  std::vector<double> rows(ny * ox);
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t x = 0; x < ox; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += w[i] * img[y * nx + x + i];
      rows[y * ox + x] = s;
    }
  std::vector<double> out(oy * ox);
  for (std::size_t y = 0; y < oy; ++y)
    for (std::size_t x = 0; x < ox; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += w[i] * rows[(y + i) * ox + x];
      out[y * ox + x] = s;
    }
  return out;
}

struct Moments {
  double mean;
  double sd;
};

Moments region_moments(const Volume& v, const Mask& m) {
  const auto data = v.data();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (m.on[i]) {
      sum += data[i];
      ++n;
    }
  if (n == 0) fail(ErrorCode::EmptyRegion, "region is empty");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (m.on[i]) ss += (data[i] - mean) * (data[i] - mean);
  const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  return {mean, sd};
}

double background_sd(const Volume& v, const RoiMasks& masks) {
  const double sd = region_moments(v, masks.background).sd;
  if (!(sd > 0.0)) fail(ErrorCode::DegenerateBackground, "background standard deviation is zero");
  return sd;
}

}  // namespace

double ssim_slice(std::span<const double> a, std::span<const double> b, std::size_t ny,
                  std::size_t nx, const SsimParams& p) {
  const auto win = static_cast<std::size_t>(p.window);
  if (ny < win || nx < win)
    fail(ErrorCode::SliceTooSmall, "slice " + std::to_string(ny) + "x" + std::to_string(nx) +
                                       " is smaller than the SSIM window");
  const auto w = gaussian_window(p.window, p.sigma);
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, ny, nx, w);
  const auto mu_b = filter_valid(b, ny, nx, w);
  const auto e_aa = filter_valid(aa, ny, nx, w);
  const auto e_bb = filter_valid(bb, ny, nx, w);
  const auto e_ab = filter_valid(ab, ny, nx, w);
  const double c1 = (p.k1 * p.data_range) * (p.k1 * p.data_range);
  const double c2 = (p.k2 * p.data_range) * (p.k2 * p.data_range);
  double sum = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return sum / static_cast<double>(mu_a.size());
}

double ssim(const Volume& pred, const Volume& gt, const SsimParams& params) {
  require_same_dims(pred, gt, "ssim");
  const Dims& d = pred.dims();
  double total = 0.0;
  for (std::size_t z = 0; z < d.nz; ++z)
    total += ssim_slice(pred.slice(z), gt.slice(z), d.ny, d.nx, params);
  return total / static_cast<double>(d.nz);
}

double snr(const Volume& v, const RoiMasks& masks) {
  const double sd = background_sd(v, masks);
  return region_moments(v, masks.foreground).mean / sd;
}

double snr(const Volume& v, const RoiSpec& roi) { return snr(v, resolve_signal_roi(v, roi)); }

double cnr(const Volume& v, const RoiMasks& masks) {
  const double sd = background_sd(v, masks);
  return std::abs(region_moments(v, masks.tissue_a).mean - region_moments(v, masks.tissue_b).mean) /
         sd;
}

double cnr(const Volume& v, const RoiSpec& roi) { return cnr(v, resolve_roi(v, roi)); }

namespace {

Eigen::MatrixXd sample_covariance(const FeatureSet& f, const Eigen::RowVectorXd& mean) {
  const Eigen::MatrixXd centered = f.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(f.rows() - 1);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double fid(const FeatureSet& a, const FeatureSet& b) {
  if (a.cols() != b.cols())
    fail(ErrorCode::DimMismatch, "feature dimensionality " + std::to_string(a.cols()) + " vs " +
                                     std::to_string(b.cols()));
  if (a.rows() < 2 || b.rows() < 2)
    fail(ErrorCode::TooFewSamples, "FID needs at least two feature vectors per set");
  if (!a.allFinite() || !b.allFinite())
    fail(ErrorCode::InvalidArgument, "feature sets must be finite");
  const Eigen::RowVectorXd mu_a = a.colwise().mean();
  const Eigen::RowVectorXd mu_b = b.colwise().mean();
  const Eigen::MatrixXd cov_a = sample_covariance(a, mu_a);
  const Eigen::MatrixXd cov_b = sample_covariance(b, mu_b);
  const Eigen::MatrixXd root_a = psd_sqrt(cov_a);
  const Eigen::MatrixXd cross = psd_sqrt(root_a * cov_b * root_a);
  const double value =
      (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * cross.trace();
  return std::max(value, 0.0);
}

}  // namespace motionqa
