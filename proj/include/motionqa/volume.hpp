#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace motionqa {

enum class Modality { T1, T2 };
enum class Severity { Mild, Moderate, Severe };

std::string to_string(Modality m);
std::string to_string(Severity s);
Modality parse_modality(const std::string& text);
Severity parse_severity(const std::string& text);

inline constexpr std::array<Severity, 3> kAllSeverities{Severity::Mild, Severity::Moderate,
                                                        Severity::Severe};

struct VolumeMeta {
  std::string patient_id;
  Modality modality = Modality::T1;
  std::string center;
  std::optional<Severity> severity_label;
  bool is_corrupted = false;

  /// Throws FormatError when patient_id is empty or a severity label is
  /// attached to a clean volume.
  void validate() const;

  bool operator==(const VolumeMeta&) const = default;
};

/// Extents of a volume in (slice z, row y, col x) order.
struct Dims {
  std::size_t nz = 0;
  std::size_t ny = 0;
  std::size_t nx = 0;

  std::size_t count() const { return nz * ny * nx; }
  std::size_t slice_size() const { return ny * nx; }
  bool operator==(const Dims&) const = default;
};

std::string to_string(const Dims& d);

/// Voxel spacing in millimetres, (dz, dy, dx).
struct Spacing {
  double dz = 1.0;
  double dy = 1.0;
  double dx = 1.0;
  bool operator==(const Spacing&) const = default;
};

/// A 3-D scalar image stored z-major, then y, then x.
///
/// Construction validates the shape and that every voxel is finite, so a
/// Volume in hand always satisfies those invariants.
class Volume {
 public:
  Volume(Dims dims, std::vector<double> data, Spacing spacing = {}, VolumeMeta meta = {});

  /// Zero-filled volume.
  static Volume zeros(Dims dims, Spacing spacing = {}, VolumeMeta meta = {});

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  const VolumeMeta& meta() const { return meta_; }
  VolumeMeta& meta() { return meta_; }

  std::span<const double> data() const { return data_; }
  std::span<const double> slice(std::size_t z) const;

  double at(std::size_t z, std::size_t y, std::size_t x) const {
    return data_[(z * dims_.ny + y) * dims_.nx + x];
  }

  double max() const;
  double min() const;

  /// Same geometry and metadata, different voxel values (validated).
  Volume with_data(std::vector<double> data) const;

  bool operator==(const Volume&) const = default;

 private:
  Dims dims_;
  std::vector<double> data_;
  Spacing spacing_;
  VolumeMeta meta_;
};

/// Clamps negative voxels to 0, then divides by the maximum.
/// Throws AllZeroVolume when no voxel is positive.
Volume normalize_max(const Volume& v);

void require_same_dims(const Volume& a, const Volume& b, const char* what);

}  // namespace motionqa
