#pragma once

#include <complex>
#include <span>
#include <vector>

#include "motionqa/volume.hpp"

namespace motionqa {

using Complex = std::complex<double>;

/// Slice-wise 2-D spectra of a Volume, DC of each slice at (ny/2, nx/2).
struct KSpaceVolume {
  Dims dims;
  std::vector<Complex> data;
  Spacing spacing;
  VolumeMeta origin_meta;

  std::span<Complex> slice(std::size_t z) {
    return std::span<Complex>(data).subspan(z * dims.slice_size(), dims.slice_size());
  }
  std::span<const Complex> slice(std::size_t z) const {
    return std::span<const Complex>(data).subspan(z * dims.slice_size(), dims.slice_size());
  }
  Complex& at(std::size_t z, std::size_t y, std::size_t x) {
    return data[(z * dims.ny + y) * dims.nx + x];
  }
  const Complex& at(std::size_t z, std::size_t y, std::size_t x) const {
    return data[(z * dims.ny + y) * dims.nx + x];
  }
};

/// Centered unitary 2-D DFT of every slice (scaling 1/sqrt(ny*nx)).
KSpaceVolume forward_transform(const Volume& v);

/// Inverse of forward_transform; returns the magnitude image.
Volume inverse_transform(const KSpaceVolume& k);

/// Inverse transform of one slice without taking the magnitude.
std::vector<Complex> inverse_transform_complex(const KSpaceVolume& k);

/// Spectral squared error reweighted by d^(alpha/2), with the weights of each
/// slice normalized to a maximum of 1. Zero iff pred == gt.
double focal_frequency_loss(const Volume& pred, const Volume& gt, double alpha = 1.0);

}  // namespace motionqa
