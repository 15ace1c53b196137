#include "motionqa/volume.hpp"

#include <algorithm>
#include <cmath>

#include "motionqa/error.hpp"

namespace motionqa {

std::string to_string(Modality m) { return m == Modality::T1 ? "T1" : "T2"; }

std::string to_string(Severity s) {
  switch (s) {
    case Severity::Mild: return "mild";
    case Severity::Moderate: return "moderate";
    case Severity::Severe: return "severe";
  }
  return "mild";
}

Modality parse_modality(const std::string& text) {
  if (text == "T1") return Modality::T1;
  if (text == "T2") return Modality::T2;
  fail(ErrorCode::FormatError, "unknown modality '" + text + "'");
}

Severity parse_severity(const std::string& text) {
  if (text == "mild") return Severity::Mild;
  if (text == "moderate") return Severity::Moderate;
  if (text == "severe") return Severity::Severe;
  fail(ErrorCode::FormatError, "unknown severity '" + text + "'");
}

void VolumeMeta::validate() const {
  if (patient_id.empty()) fail(ErrorCode::FormatError, "patient_id must be non-empty");
  if (severity_label && !is_corrupted)
    fail(ErrorCode::FormatError, "severity_label requires is_corrupted");
}

std::string to_string(const Dims& d) {
  return "[" + std::to_string(d.nz) + "," + std::to_string(d.ny) + "," + std::to_string(d.nx) + "]";
}

Volume::Volume(Dims dims, std::vector<double> data, Spacing spacing, VolumeMeta meta)
    : dims_(dims), data_(std::move(data)), spacing_(spacing), meta_(std::move(meta)) {
  if (dims_.nz == 0 || dims_.ny == 0 || dims_.nx == 0)
    fail(ErrorCode::DimMismatch, "volume dims must be >= 1, got " + to_string(dims_));
  if (data_.size() != dims_.count())
    fail(ErrorCode::DimMismatch, "payload has " + std::to_string(data_.size()) +
                                     " voxels, dims " + to_string(dims_) + " need " +
                                     std::to_string(dims_.count()));
  for (double v : data_)
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "volume contains a non-finite voxel");
}

Volume Volume::zeros(Dims dims, Spacing spacing, VolumeMeta meta) {
  return Volume(dims, std::vector<double>(dims.count(), 0.0), spacing, std::move(meta));
}

std::span<const double> Volume::slice(std::size_t z) const {
  return std::span<const double>(data_).subspan(z * dims_.slice_size(), dims_.slice_size());
}

double Volume::max() const { return *std::max_element(data_.begin(), data_.end()); }
double Volume::min() const { return *std::min_element(data_.begin(), data_.end()); }

Volume Volume::with_data(std::vector<double> data) const {
  return Volume(dims_, std::move(data), spacing_, meta_);
}

Volume normalize_max(const Volume& v) {
  const double peak = v.max();
  if (!(peak > 0.0)) fail(ErrorCode::AllZeroVolume, "volume has no positive voxel");
  std::vector<double> out(v.data().begin(), v.data().end());
  for (double& x : out) x = std::max(x, 0.0) / peak;
  return v.with_data(std::move(out));
}

void require_same_dims(const Volume& a, const Volume& b, const char* what) {
  if (a.dims() != b.dims())
    fail(ErrorCode::DimMismatch, std::string(what) + ": dims " + to_string(a.dims()) + " vs " +
                                     to_string(b.dims()));
}

}  // namespace motionqa
