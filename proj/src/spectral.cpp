#include "motionqa/spectral.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include <fftw3.h>

#include "motionqa/error.hpp"

namespace motionqa {
namespace {

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : ptr(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!ptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* ptr;
};

// FFTW's planner is not thread-safe; plans are created once per shape under a
// lock and then executed concurrently through the new-array interface.
// FFTW_UNALIGNED keeps the chosen codelets independent of buffer alignment so
// results are bit-stable.
class PlanCache {
 public:
  fftw_plan get(std::size_t ny, std::size_t nx, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(ny, nx, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    FftwBuffer in(ny * nx), out(ny * nx);
    fftw_plan p = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), in.ptr, out.ptr,
                                   sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

// Unitary FFT of one slice in natural (uncentered) order.
void fft_slice(std::span<const Complex> in, std::span<Complex> out, std::size_t ny, std::size_t nx,
               int sign) {
  const std::size_t n = ny * nx;
  FftwBuffer a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a.ptr[i][0] = in[i].real();
    a.ptr[i][1] = in[i].imag();
  }
  fftw_execute_dft(plan_cache().get(ny, nx, sign), a.ptr, b.ptr);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) out[i] = Complex(b.ptr[i][0] * scale, b.ptr[i][1] * scale);
}

// fftshift moves index 0 to floor(n/2); ifftshift undoes it.
std::size_t shift_index(std::size_t i, std::size_t n) { return (i + n / 2) % n; }
std::size_t unshift_index(std::size_t i, std::size_t n) { return (i + n - n / 2) % n; }

}  // namespace

KSpaceVolume forward_transform(const Volume& v) {
  const Dims d = v.dims();
  KSpaceVolume k{d, std::vector<Complex>(d.count()), v.spacing(), v.meta()};
  std::vector<Complex> in(d.slice_size()), out(d.slice_size());
  for (std::size_t z = 0; z < d.nz; ++z) {
    const auto s = v.slice(z);
    for (std::size_t i = 0; i < s.size(); ++i) in[i] = Complex(s[i], 0.0);
    fft_slice(in, out, d.ny, d.nx, FFTW_FORWARD);
    auto dst = k.slice(z);
    for (std::size_t y = 0; y < d.ny; ++y)
      for (std::size_t x = 0; x < d.nx; ++x)
        dst[shift_index(y, d.ny) * d.nx + shift_index(x, d.nx)] = out[y * d.nx + x];
  }
  return k;
}

std::vector<Complex> inverse_transform_complex(const KSpaceVolume& k) {
  const Dims d = k.dims;
  if (k.data.size() != d.count()) fail(ErrorCode::DimMismatch, "k-space payload size mismatch");
  std::vector<Complex> result(d.count());
  std::vector<Complex> in(d.slice_size());
  for (std::size_t z = 0; z < d.nz; ++z) {
    const auto src = k.slice(z);
    for (std::size_t y = 0; y < d.ny; ++y)
      for (std::size_t x = 0; x < d.nx; ++x)
        in[unshift_index(y, d.ny) * d.nx + unshift_index(x, d.nx)] = src[y * d.nx + x];
    fft_slice(in, std::span<Complex>(result).subspan(z * d.slice_size(), d.slice_size()), d.ny,
              d.nx, FFTW_BACKWARD);
  }
  return result;
}

Volume inverse_transform(const KSpaceVolume& k) {
  const auto complex_image = inverse_transform_complex(k);
  std::vector<double> mag(complex_image.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(complex_image[i]);
  return Volume(k.dims, std::move(mag), k.spacing, k.origin_meta);
}

double focal_frequency_loss(const Volume& pred, const Volume& gt, double alpha) {
  require_same_dims(pred, gt, "focal_frequency_loss");
  if (!std::isfinite(alpha) || alpha < 0.0)
    fail(ErrorCode::InvalidArgument, "focal frequency alpha must be finite and >= 0");
  const auto fp = forward_transform(pred);
  const auto fg = forward_transform(gt);
  const Dims d = pred.dims();
  std::vector<double> dist(d.slice_size());
  double total = 0.0;
  for (std::size_t z = 0; z < d.nz; ++z) {
    const auto a = fp.slice(z);
    const auto b = fg.slice(z);
    double max_weight = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      dist[i] = std::norm(a[i] - b[i]);
      if (dist[i] > 0.0) max_weight = std::max(max_weight, std::pow(dist[i], alpha / 2.0));
    }
    if (max_weight == 0.0) continue;
    double slice_sum = 0.0;
    for (double di : dist)
      if (di > 0.0) slice_sum += std::pow(di, alpha / 2.0) / max_weight * di;
    total += slice_sum;
  }
  return total / static_cast<double>(d.count());
}

}  // namespace motionqa
