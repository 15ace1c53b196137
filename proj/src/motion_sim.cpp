#include "motionqa/motion_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "motionqa/error.hpp"
#include "motionqa/rng.hpp"

namespace motionqa {
namespace {

constexpr std::uint64_t kRatioStream = 1;
constexpr std::uint64_t kPhaseStream = 2;
constexpr std::uint64_t kLineStream = 3;

std::size_t dc_row(std::size_t ny) { return ny / 2; }

Volume finish(const KSpaceVolume& k, const Volume& clean, Severity level) {
  Volume corrupted = normalize_max(inverse_transform(k));
  corrupted.meta() = clean.meta();
  corrupted.meta().is_corrupted = true;
  corrupted.meta().severity_label = level;
  return corrupted;
}

}  // namespace

void SeverityProfile::validate() const {
  if (!(phase_bound >= 0.0) || !std::isfinite(phase_bound))
    fail(ErrorCode::InvalidArgument, "phase_bound must be finite and >= 0");
  if (!(retain_lo > 0.0 && retain_lo <= retain_hi && retain_hi <= 1.0))
    fail(ErrorCode::InvalidArgument, "retain ratio range must satisfy 0 < lo <= hi <= 1");
}

SeverityProfile severity_params(Severity level) {
  constexpr double pi = std::numbers::pi;
  switch (level) {
    case Severity::Mild: return {level, 0.1 * pi, 0.60, 0.80};
    case Severity::Moderate: return {level, 0.3 * pi, 0.40, 0.60};
    case Severity::Severe: return {level, 0.5 * pi, 0.20, 0.40};
  }
  return {level, 0.0, 1.0, 1.0};
}

PhasePerturbation perturb_phase(const KSpaceVolume& k, double phase_bound, std::uint64_t seed,
                                PhaseMode mode) {
  if (!(phase_bound >= 0.0) || !std::isfinite(phase_bound))
    fail(ErrorCode::InvalidArgument, "phase_bound must be finite and >= 0");
  PhasePerturbation out{k, {}};
  if (phase_bound == 0.0) {
    const std::size_t n = mode == PhaseMode::PerLine ? k.dims.nz * k.dims.ny : k.dims.count();
    out.phases.assign(n, 0.0);
    return out;
  }
  Rng rng(seed);
  const Dims& d = k.dims;
  for (std::size_t z = 0; z < d.nz; ++z)
    for (std::size_t y = 0; y < d.ny; ++y) {
      if (mode == PhaseMode::PerLine) {
        const double theta = rng.uniform(-phase_bound, phase_bound);
        out.phases.push_back(theta);
        const Complex rot = std::polar(1.0, theta);
        for (std::size_t x = 0; x < d.nx; ++x) out.kspace.at(z, y, x) *= rot;
      } else {
        for (std::size_t x = 0; x < d.nx; ++x) {
          const double theta = rng.uniform(-phase_bound, phase_bound);
          out.phases.push_back(theta);
          out.kspace.at(z, y, x) *= std::polar(1.0, theta);
        }
      }
    }
  return out;
}

std::vector<std::size_t> select_lines(std::size_t ny, double retain_ratio, std::uint64_t seed,
                                      SamplingMode mode) {
  if (!(retain_ratio > 0.0 && retain_ratio <= 1.0))
    fail(ErrorCode::InvalidArgument, "retain_ratio must lie in (0, 1]");
  const std::size_t keep = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(retain_ratio * static_cast<double>(ny))), 1, ny);
  const std::size_t dc = dc_row(ny);
  std::vector<std::size_t> lines;
  if (keep == ny) {
    lines.resize(ny);
    std::iota(lines.begin(), lines.end(), 0);
    return lines;
  }
  if (mode == SamplingMode::Equispaced) {
    // Evenly spaced rows anchored at the DC row.
    const double step = static_cast<double>(ny) / static_cast<double>(keep);
    for (std::size_t i = 0; i < keep; ++i)
      lines.push_back((dc + static_cast<std::size_t>(std::floor(i * step))) % ny);
  } else {
    std::vector<std::size_t> pool;
    for (std::size_t y = 0; y < ny; ++y)
      if (y != dc) pool.push_back(y);
    Rng rng(seed);
    // Partial Fisher-Yates over the non-DC rows.
    for (std::size_t i = 0; i + 1 < keep; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    lines.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep - 1));
    lines.push_back(dc);
  }
  std::sort(lines.begin(), lines.end());
  return lines;
}

Undersampling undersample(const KSpaceVolume& k, double retain_ratio, std::uint64_t seed,
                          SamplingMode mode) {
  Undersampling out{k, select_lines(k.dims.ny, retain_ratio, seed, mode)};
  std::vector<bool> keep(k.dims.ny, false);
  for (auto y : out.retained_lines) keep[y] = true;
  for (std::size_t z = 0; z < k.dims.nz; ++z)
    for (std::size_t y = 0; y < k.dims.ny; ++y)
      if (!keep[y])
        for (std::size_t x = 0; x < k.dims.nx; ++x) out.kspace.at(z, y, x) = Complex(0.0, 0.0);
  return out;
}

SimulatedPair simulate_pair(const Volume& clean, const SeverityProfile& profile, std::uint64_t seed,
                            const SimulationOptions& options) {
  profile.validate();
  Rng ratio_rng(derive_seed(seed, kRatioStream));
  const double ratio = profile.retain_lo == profile.retain_hi
                           ? profile.retain_lo
                           : ratio_rng.uniform(profile.retain_lo, profile.retain_hi);

  const auto k = forward_transform(clean);
  auto perturbed = perturb_phase(k, profile.phase_bound, derive_seed(seed, kPhaseStream),
                                 options.phase_mode);
  auto sampled = undersample(perturbed.kspace, ratio, derive_seed(seed, kLineStream),
                             options.sampling_mode);

  CorruptionRecord record;
  record.seed = seed;
  record.level = profile.level;
  record.retain_ratio = ratio;
  record.retained_lines = sampled.retained_lines;
  if (options.phase_mode == PhaseMode::PerLine) {
    const Dims& d = k.dims;
    record.per_line_phase.resize(d.nz);
    for (std::size_t z = 0; z < d.nz; ++z)
      for (auto y : record.retained_lines)
        record.per_line_phase[z].push_back(perturbed.phases[z * d.ny + y]);
  }
  return {finish(sampled.kspace, clean, profile.level), clean, std::move(record)};
}

SimulatedPair simulate_pair(const Volume& clean, Severity level, std::uint64_t seed,
                            const SimulationOptions& options) {
  return simulate_pair(clean, severity_params(level), seed, options);
}

Volume replay_corruption(const Volume& clean, const CorruptionRecord& record) {
  const Dims& d = clean.dims();
  if (record.per_line_phase.size() != d.nz)
    fail(ErrorCode::DimMismatch, "record has phases for " +
                                     std::to_string(record.per_line_phase.size()) + " slices, volume has " +
                                     std::to_string(d.nz));
  KSpaceVolume k = forward_transform(clean);
  std::vector<long> position(d.ny, -1);
  for (std::size_t i = 0; i < record.retained_lines.size(); ++i) {
    const auto y = record.retained_lines[i];
    if (y >= d.ny) fail(ErrorCode::DimMismatch, "retained line outside the volume");
    position[y] = static_cast<long>(i);
  }
  for (std::size_t z = 0; z < d.nz; ++z) {
    if (record.per_line_phase[z].size() != record.retained_lines.size())
      fail(ErrorCode::DimMismatch, "per_line_phase row length differs from retained_lines");
    for (std::size_t y = 0; y < d.ny; ++y) {
      if (position[y] < 0) {
        for (std::size_t x = 0; x < d.nx; ++x) k.at(z, y, x) = Complex(0.0, 0.0);
        continue;
      }
      const double theta = record.per_line_phase[z][static_cast<std::size_t>(position[y])];
      if (theta == 0.0) continue;
      const Complex rot = std::polar(1.0, theta);
      for (std::size_t x = 0; x < d.nx; ++x) k.at(z, y, x) *= rot;
    }
  }
  return finish(k, clean, record.level);
}

nlohmann::json record_to_json(const CorruptionRecord& r) {
  nlohmann::json j;
  j["seed"] = r.seed;
  j["level"] = to_string(r.level);
  j["retain_ratio"] = r.retain_ratio;
  j["retained_lines"] = r.retained_lines;
  j["per_line_phase"] = r.per_line_phase;
  return j;
}

CorruptionRecord record_from_json(const nlohmann::json& j) {
  try {
    CorruptionRecord r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.level = parse_severity(j.at("level").get<std::string>());
    r.retain_ratio = j.at("retain_ratio").get<double>();
    r.retained_lines = j.at("retained_lines").get<std::vector<std::size_t>>();
    r.per_line_phase = j.at("per_line_phase").get<std::vector<std::vector<double>>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("corruption record: ") + e.what());
  }
}

}  // namespace motionqa
