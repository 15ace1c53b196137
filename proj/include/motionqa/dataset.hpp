#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionqa/motion_sim.hpp"
#include "motionqa/volume.hpp"

namespace motionqa {

struct RosterEntry {
  std::string volume_id;
  std::string patient_id;
  Modality modality = Modality::T1;
  bool is_corrupted = false;
  std::optional<Severity> severity_label;
  std::string center;
  /// For a simulated corrupted volume, the id of its clean source.
  std::optional<std::string> reference_id;

  bool operator==(const RosterEntry&) const = default;
};

struct Roster {
  std::vector<RosterEntry> entries;

  /// Throws InvalidArgument on duplicate volume ids or empty patient ids.
  void validate() const;
  /// Entries ordered by volume_id.
  Roster sorted() const;
  const RosterEntry* find(const std::string& volume_id) const;
};

nlohmann::json roster_to_json(const Roster& r);
Roster roster_from_json(const nlohmann::json& j);

/// Roster fields usable as strata or class keys.
enum class RosterField { IsCorrupted, Severity, Modality, Center };
RosterField parse_roster_field(const std::string& name);
std::string to_string(RosterField f);
std::string field_value(const RosterEntry& e, RosterField f);

struct SplitPlan {
  /// Subset name -> sorted volume ids, in declaration order.
  std::vector<std::pair<std::string, std::vector<std::string>>> subsets;
  std::uint64_t seed = 0;
  std::string policy;

  const std::vector<std::string>& subset(const std::string& name) const;
};

nlohmann::json plan_to_json(const SplitPlan& p);
SplitPlan plan_from_json(const nlohmann::json& j);

using NamedFractions = std::vector<std::pair<std::string, double>>;

/// Shuffles patients with the seed, then gives each patient's volumes to the
/// subset furthest below its target volume count. All volumes of a patient
/// land in one subset even if that leaves another subset empty. Fractions
/// must be non-negative and sum to 1. Throws InsufficientPatients for an
/// empty roster.
SplitPlan patient_level_split(const Roster& r, const NamedFractions& fractions, std::uint64_t seed);

/// Within every stratum a seeded round(fraction * size) entries (at least
/// one when fraction > 0) go to the first subset, the rest to the second.
/// Throws EmptyStratum for an empty roster or a required stratum with no
/// entries.
SplitPlan stratified_split(const Roster& r, RosterField strata_key, double fraction,
                           std::uint64_t seed,
                           std::pair<std::string, std::string> names = {"train", "validation"},
                           const std::vector<std::string>& required_strata = {});

/// Reduces every class to the minority count. Throws SingleClass.
Roster balanced_undersample(const Roster& r, RosterField class_key, std::uint64_t seed);

struct SeverityCounts {
  std::size_t mild = 0;
  std::size_t moderate = 0;
  std::size_t severe = 0;
  std::size_t total() const { return mild + moderate + severe; }
};

/// "mild=4,moderate=3,severe=3"; missing levels default to 0.
SeverityCounts parse_severity_counts(const std::string& text);

struct CorpusJob {
  std::size_t index = 0;
  std::string clean_id;
  Severity level = Severity::Mild;
  std::uint64_t seed = 0;
  std::string corrupted_id;
};

/// Round-robin plan: job i uses clean_ids[i % n] and seed seed_base + i.
std::vector<CorpusJob> plan_corpus(const std::vector<std::string>& clean_ids,
                                   const SeverityCounts& counts, std::uint64_t seed_base);

struct CorpusResult {
  Roster roster;
  std::vector<std::pair<std::string, CorruptionRecord>> records;  // by corrupted id
};

/// Simulates every planned job, writing `clean/<id>`, `corrupted/<id>` and
/// `records/<id>.record.json` under dest. Throws MissingVolume when a clean id
/// is absent from the source and StoreWriteError when dest cannot be written.
CorpusResult build_simulated_corpus(const std::vector<std::string>& clean_ids,
                                    const SeverityCounts& counts, std::uint64_t seed_base,
                                    const std::filesystem::path& source_store,
                                    const std::filesystem::path& dest_store,
                                    std::size_t threads = 1, const SimulationOptions& options = {});

struct ArithmeticReport {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Checks subset sizes against an expected table and pairwise disjointness.
ArithmeticReport cohort_arithmetic_check(const SplitPlan& plan,
                                         const std::map<std::string, std::size_t>& expected);

/// Seeded joint augmentation of an aligned pair: optional left-right flip and
/// an in-plane rotation drawn from [-5, 5] degrees, applied identically.
std::pair<Volume, Volume> augment_pair(const Volume& a, const Volume& b, std::uint64_t seed);

}  // namespace motionqa
