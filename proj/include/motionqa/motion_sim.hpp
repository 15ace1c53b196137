#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionqa/spectral.hpp"
#include "motionqa/volume.hpp"

namespace motionqa {

struct SeverityProfile {
  Severity level = Severity::Mild;
  double phase_bound = 0.0;  // radians
  double retain_lo = 1.0;
  double retain_hi = 1.0;

  void validate() const;
};

/// Fixed profile table: phase bound and retained-line ratio range per level.
SeverityProfile severity_params(Severity level);

enum class PhaseMode { PerLine, PerSample };
enum class SamplingMode { Random, Equispaced };

struct SimulationOptions {
  PhaseMode phase_mode = PhaseMode::PerLine;
  SamplingMode sampling_mode = SamplingMode::Random;
};

struct PhasePerturbation {
  KSpaceVolume kspace;
  /// Row-major (slice, row) phases for PerLine mode; (slice, row, col) for
  /// PerSample mode.
  std::vector<double> phases;
};

/// Multiplies each phase-encode line of each slice by exp(i*theta) with
/// theta ~ U(-phase_bound, phase_bound) from a seeded stream.
PhasePerturbation perturb_phase(const KSpaceVolume& k, double phase_bound, std::uint64_t seed,
                                PhaseMode mode = PhaseMode::PerLine);

struct Undersampling {
  KSpaceVolume kspace;
  std::vector<std::size_t> retained_lines;  // sorted ascending
};

/// Keeps round(retain_ratio * ny) rows (at least one, always the DC row) and
/// zeroes the rest. The pattern is shared by every slice.
Undersampling undersample(const KSpaceVolume& k, double retain_ratio, std::uint64_t seed,
                          SamplingMode mode = SamplingMode::Random);

std::vector<std::size_t> select_lines(std::size_t ny, double retain_ratio, std::uint64_t seed,
                                      SamplingMode mode);

/// Everything needed to replay one corruption without the generator.
struct CorruptionRecord {
  std::uint64_t seed = 0;
  Severity level = Severity::Mild;
  double retain_ratio = 1.0;
  std::vector<std::size_t> retained_lines;
  /// One row per slice, one phase per retained line (PerLine mode).
  std::vector<std::vector<double>> per_line_phase;

  bool operator==(const CorruptionRecord&) const = default;
};

nlohmann::json record_to_json(const CorruptionRecord& r);
CorruptionRecord record_from_json(const nlohmann::json& j);

struct SimulatedPair {
  Volume corrupted;
  Volume clean;
  CorruptionRecord record;
};

/// forward transform -> phase perturbation -> undersampling -> inverse
/// transform -> max normalization. The corrupted meta is flagged with the
/// profile's level.
SimulatedPair simulate_pair(const Volume& clean, const SeverityProfile& profile, std::uint64_t seed,
                            const SimulationOptions& options = {});

SimulatedPair simulate_pair(const Volume& clean, Severity level, std::uint64_t seed,
                            const SimulationOptions& options = {});

/// Rebuilds the corrupted volume from a PerLine record alone.
Volume replay_corruption(const Volume& clean, const CorruptionRecord& record);

/// Seed used for the i-th volume of a batch; serial and parallel runs agree.
inline std::uint64_t volume_seed(std::uint64_t seed_base, std::uint64_t index) {
  return seed_base + index;
}

}  // namespace motionqa
