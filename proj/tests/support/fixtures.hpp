#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "motionqa/rng.hpp"
#include "motionqa/volume.hpp"

namespace motionqa::testing {

// Head-like phantom: nested ellipses at a few intensities on a faint noisy
// background. Values lie in [0, 1] and the maximum is exactly 1.
inline Volume make_phantom(Dims d, std::uint64_t seed = 1, double noise = 0.01,
                           const std::string& patient = "p0") {
  struct Ellipse {
    double cy, cx, ry, rx, value;
  };
  const std::vector<Ellipse> shapes{{0.0, 0.0, 0.85, 0.70, 0.55},
                                    {0.0, 0.0, 0.78, 0.63, 0.35},
                                    {-0.25, -0.22, 0.20, 0.12, 0.90},
                                    {-0.25, 0.22, 0.20, 0.12, 0.90},
                                    {0.30, 0.0, 0.16, 0.25, 0.75},
                                    {0.05, 0.0, 0.06, 0.06, 1.00}};
  Rng rng(seed);
  std::vector<double> data(d.count());
  for (std::size_t z = 0; z < d.nz; ++z) {
    const double zs = 1.0 - 0.3 * std::abs((z + 0.5) / d.nz - 0.5);
    for (std::size_t y = 0; y < d.ny; ++y) {
      for (std::size_t x = 0; x < d.nx; ++x) {
        const double py = 2.0 * (y + 0.5) / d.ny - 1.0;
        const double px = 2.0 * (x + 0.5) / d.nx - 1.0;
        double v = 0.0;
        for (const auto& e : shapes) {
          const double ry = e.ry * zs, rx = e.rx * zs;
          const double q = (py - e.cy) * (py - e.cy) / (ry * ry) + (px - e.cx) * (px - e.cx) / (rx * rx);
          if (q <= 1.0) v = e.value;
        }
        data[(z * d.ny + y) * d.nx + x] = v + noise * std::abs(rng.normal());
      }
    }
  }
  VolumeMeta meta;
  meta.patient_id = patient;
  meta.center = "phantom";
  return normalize_max(Volume(d, std::move(data), {}, meta));
}

// Uniform [0, 1) voxels.
inline Volume random_volume(Dims d, std::uint64_t seed, const std::string& patient = "p0") {
  Rng rng(seed);
  std::vector<double> data(d.count());
  for (auto& v : data) v = rng.uniform01();
  VolumeMeta meta;
  meta.patient_id = patient;
  return Volume(d, std::move(data), {}, meta);
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("motionqa_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace motionqa::testing
