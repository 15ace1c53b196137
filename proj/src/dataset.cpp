#include "motionqa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>

#include "motionqa/container.hpp"
#include "motionqa/error.hpp"
#include "motionqa/parallel.hpp"
#include "motionqa/rng.hpp"

namespace motionqa {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
void seeded_shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

void Roster::validate() const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (e.patient_id.empty())
      fail(ErrorCode::InvalidArgument, "roster entry '" + e.volume_id + "' has no patient_id");
    if (!ids.insert(e.volume_id).second)
      fail(ErrorCode::InvalidArgument, "duplicate volume id '" + e.volume_id + "' in roster");
  }
}

Roster Roster::sorted() const {
  Roster out = *this;
  std::sort(out.entries.begin(), out.entries.end(),
            [](const RosterEntry& a, const RosterEntry& b) { return a.volume_id < b.volume_id; });
  return out;
}

const RosterEntry* Roster::find(const std::string& volume_id) const {
  for (const auto& e : entries)
    if (e.volume_id == volume_id) return &e;
  return nullptr;
}

json roster_to_json(const Roster& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    json j{{"volume_id", e.volume_id},
           {"patient_id", e.patient_id},
           {"modality", to_string(e.modality)},
           {"is_corrupted", e.is_corrupted},
           {"severity_label", e.severity_label ? json(to_string(*e.severity_label)) : json(nullptr)},
           {"center", e.center}};
    if (e.reference_id) j["reference_id"] = *e.reference_id;
    entries.push_back(std::move(j));
  }
  return {{"entries", entries}};
}

Roster roster_from_json(const json& j) {
  Roster r;
  try {
    for (const auto& e : j.at("entries")) {
      RosterEntry entry;
      entry.volume_id = e.at("volume_id").get<std::string>();
      entry.patient_id = e.at("patient_id").get<std::string>();
      entry.modality = parse_modality(e.value("modality", std::string("T1")));
      entry.is_corrupted = e.value("is_corrupted", false);
      if (e.contains("severity_label") && !e["severity_label"].is_null())
        entry.severity_label = parse_severity(e["severity_label"].get<std::string>());
      entry.center = e.value("center", std::string{});
      if (e.contains("reference_id")) entry.reference_id = e["reference_id"].get<std::string>();
      r.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& ex) {
    fail(ErrorCode::FormatError, std::string("roster: ") + ex.what());
  }
  r.validate();
  return r;
}

RosterField parse_roster_field(const std::string& name) {
  if (name == "is_corrupted") return RosterField::IsCorrupted;
  if (name == "severity" || name == "severity_label") return RosterField::Severity;
  if (name == "modality") return RosterField::Modality;
  if (name == "center") return RosterField::Center;
  fail(ErrorCode::InvalidArgument, "unknown roster field '" + name + "'");
}

std::string to_string(RosterField f) {
  switch (f) {
    case RosterField::IsCorrupted: return "is_corrupted";
    case RosterField::Severity: return "severity";
    case RosterField::Modality: return "modality";
    case RosterField::Center: return "center";
  }
  return "";
}

std::string field_value(const RosterEntry& e, RosterField f) {
  switch (f) {
    case RosterField::IsCorrupted: return e.is_corrupted ? "1" : "0";
    case RosterField::Severity: return e.severity_label ? to_string(*e.severity_label) : "none";
    case RosterField::Modality: return to_string(e.modality);
    case RosterField::Center: return e.center;
  }
  return "";
}

const std::vector<std::string>& SplitPlan::subset(const std::string& name) const {
  for (const auto& [n, ids] : subsets)
    if (n == name) return ids;
  fail(ErrorCode::InvalidArgument, "split plan has no subset '" + name + "'");
}

json plan_to_json(const SplitPlan& p) {
  json subsets = json::array();
  for (const auto& [name, ids] : p.subsets) subsets.push_back({{"name", name}, {"volume_ids", ids}});
  return {{"seed", p.seed}, {"policy", p.policy}, {"subsets", subsets}};
}

SplitPlan plan_from_json(const json& j) {
  SplitPlan p;
  try {
    p.seed = j.at("seed").get<std::uint64_t>();
    p.policy = j.at("policy").get<std::string>();
    for (const auto& s : j.at("subsets"))
      p.subsets.emplace_back(s.at("name").get<std::string>(),
                             s.at("volume_ids").get<std::vector<std::string>>());
  } catch (const json::exception& ex) {
    fail(ErrorCode::FormatError, std::string("split plan: ") + ex.what());
  }
  return p;
}

SplitPlan patient_level_split(const Roster& roster, const NamedFractions& fractions,
                              std::uint64_t seed) {
  roster.validate();
  if (roster.entries.empty()) fail(ErrorCode::InsufficientPatients, "roster is empty");
  if (fractions.empty()) fail(ErrorCode::InvalidArgument, "no subsets requested");
  double sum = 0.0;
  for (const auto& [name, f] : fractions) {
    if (!(f >= 0.0)) fail(ErrorCode::InvalidArgument, "fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::InvalidArgument, "fractions must sum to 1");

  const Roster r = roster.sorted();
  std::map<std::string, std::vector<std::string>> by_patient;
  for (const auto& e : r.entries) by_patient[e.patient_id].push_back(e.volume_id);
  std::vector<std::string> patients;
  for (const auto& [p, ids] : by_patient) patients.push_back(p);
  Rng rng(seed);
  seeded_shuffle(patients, rng);

  const double total = static_cast<double>(r.entries.size());
  std::vector<double> assigned(fractions.size(), 0.0);
  SplitPlan plan;
  plan.seed = seed;
  plan.policy = "patient_level";
  for (const auto& [name, f] : fractions) plan.subsets.emplace_back(name, std::vector<std::string>{});
  for (const auto& p : patients) {
    std::size_t best = 0;
    double best_deficit = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fractions.size(); ++i) {
      const double deficit = fractions[i].second * total - assigned[i];
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = i;
      }
    }
    const auto& ids = by_patient[p];
    assigned[best] += static_cast<double>(ids.size());
    auto& dst = plan.subsets[best].second;
    dst.insert(dst.end(), ids.begin(), ids.end());
  }
  for (auto& [name, ids] : plan.subsets) std::sort(ids.begin(), ids.end());
  return plan;
}

SplitPlan stratified_split(const Roster& roster, RosterField strata_key, double fraction,
                           std::uint64_t seed, std::pair<std::string, std::string> names,
                           const std::vector<std::string>& required_strata) {
  roster.validate();
  if (!(fraction >= 0.0 && fraction <= 1.0))
    fail(ErrorCode::InvalidArgument, "fraction must lie in [0, 1]");
  if (roster.entries.empty()) fail(ErrorCode::EmptyStratum, "roster is empty");
  const Roster r = roster.sorted();
  std::map<std::string, std::vector<std::string>> strata;
  for (const auto& e : r.entries) strata[field_value(e, strata_key)].push_back(e.volume_id);
  for (const auto& s : required_strata)
    if (!strata.contains(s)) fail(ErrorCode::EmptyStratum, "stratum '" + s + "' has no entries");

  SplitPlan plan;
  plan.seed = seed;
  plan.policy = "stratified:" + to_string(strata_key);
  plan.subsets = {{names.first, {}}, {names.second, {}}};
  Rng rng(seed);
  for (auto& [key, ids] : strata) {
    std::size_t take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ids.size())));
    if (fraction > 0.0) take = std::max<std::size_t>(take, 1);
    take = std::min(take, ids.size());
    seeded_shuffle(ids, rng);
    auto& first = plan.subsets[0].second;
    auto& second = plan.subsets[1].second;
    first.insert(first.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take));
    second.insert(second.end(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end());
  }
  for (auto& [name, ids] : plan.subsets) std::sort(ids.begin(), ids.end());
  return plan;
}

Roster balanced_undersample(const Roster& roster, RosterField class_key, std::uint64_t seed) {
  roster.validate();
  const Roster r = roster.sorted();
  std::map<std::string, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < r.entries.size(); ++i)
    classes[field_value(r.entries[i], class_key)].push_back(i);
  if (classes.size() < 2)
    fail(ErrorCode::SingleClass, "balancing needs at least two classes of " + to_string(class_key));
  std::size_t minority = std::numeric_limits<std::size_t>::max();
  for (const auto& [k, idx] : classes) minority = std::min(minority, idx.size());
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& [k, idx] : classes) {
    if (idx.size() > minority) seeded_shuffle(idx, rng);
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(minority));
  }
  std::sort(keep.begin(), keep.end());
  Roster out;
  for (auto i : keep) out.entries.push_back(r.entries[i]);
  return out;
}

SeverityCounts parse_severity_counts(const std::string& text) {
  SeverityCounts c;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    pos = comma == std::string::npos ? text.size() : comma + 1;
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::InvalidArgument, "count '" + item + "' is not of the form level=n");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    std::size_t n = 0;
    try {
      std::size_t used = 0;
      const long long parsed = std::stoll(value, &used);
      if (used != value.size() || parsed < 0) throw std::invalid_argument(value);
      n = static_cast<std::size_t>(parsed);
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidArgument, "count for '" + key + "' must be a non-negative integer");
    }
    switch (parse_severity(key)) {
      case Severity::Mild: c.mild = n; break;
      case Severity::Moderate: c.moderate = n; break;
      case Severity::Severe: c.severe = n; break;
    }
  }
  return c;
}

std::vector<CorpusJob> plan_corpus(const std::vector<std::string>& clean_ids,
                                   const SeverityCounts& counts, std::uint64_t seed_base) {
  std::vector<CorpusJob> jobs;
  if (counts.total() == 0) return jobs;
  if (clean_ids.empty()) fail(ErrorCode::MissingVolume, "no clean volumes to corrupt");
  const std::pair<Severity, std::size_t> order[] = {
      {Severity::Mild, counts.mild}, {Severity::Moderate, counts.moderate}, {Severity::Severe, counts.severe}};
  for (const auto& [level, n] : order)
    for (std::size_t k = 0; k < n; ++k) {
      CorpusJob job;
      job.index = jobs.size();
      job.clean_id = clean_ids[job.index % clean_ids.size()];
      job.level = level;
      job.seed = volume_seed(seed_base, job.index);
      char suffix[32];
      std::snprintf(suffix, sizeof suffix, "_%04zu", job.index);
      job.corrupted_id = job.clean_id + "_" + to_string(level) + suffix;
      jobs.push_back(std::move(job));
    }
  return jobs;
}

CorpusResult build_simulated_corpus(const std::vector<std::string>& clean_ids,
                                    const SeverityCounts& counts, std::uint64_t seed_base,
                                    const fs::path& source_store, const fs::path& dest_store,
                                    std::size_t threads, const SimulationOptions& options) {
  const auto jobs = plan_corpus(clean_ids, counts, seed_base);
  CorpusResult result;
  if (jobs.empty()) return result;

  std::vector<std::string> used;
  for (const auto& j : jobs)
    if (std::find(used.begin(), used.end(), j.clean_id) == used.end()) used.push_back(j.clean_id);
  std::sort(used.begin(), used.end());
  for (const auto& id : used)
    if (!volume_exists(source_store / id))
      fail(ErrorCode::MissingVolume, "clean volume '" + id + "' not found in " + source_store.string());

  const fs::path clean_dir = dest_store / "clean", corrupted_dir = dest_store / "corrupted",
                 record_dir = dest_store / "records";
  try {
    fs::create_directories(clean_dir);
    fs::create_directories(corrupted_dir);
    fs::create_directories(record_dir);
  } catch (const fs::filesystem_error& e) {
    fail(ErrorCode::StoreWriteError, e.what());
  }

  auto write_or_fail = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::IoError) fail(ErrorCode::StoreWriteError, e.what());
      throw;
    }
  };

  std::vector<std::optional<Volume>> clean(used.size());
  parallel_for(used.size(), threads, [&](std::size_t i) {
    clean[i] = normalize_max(load_volume(source_store / used[i]));
    write_or_fail([&] { save_volume(*clean[i], clean_dir / used[i]); });
  });
  auto clean_of = [&](const std::string& id) -> const Volume& {
    const auto it = std::lower_bound(used.begin(), used.end(), id);
    return *clean[static_cast<std::size_t>(it - used.begin())];
  };

  std::vector<std::optional<CorruptionRecord>> records(jobs.size());
  std::vector<std::optional<VolumeMeta>> metas(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const auto& job = jobs[i];
    auto pair = simulate_pair(clean_of(job.clean_id), job.level, job.seed, options);
    write_or_fail([&] { save_volume(pair.corrupted, corrupted_dir / job.corrupted_id); });
    const fs::path record_path = record_dir / (job.corrupted_id + ".record.json");
    std::ofstream out(record_path, std::ios::trunc);
    if (!out) fail(ErrorCode::StoreWriteError, "cannot write " + record_path.string());
    out << record_to_json(pair.record).dump(2) << '\n';
    if (!out) fail(ErrorCode::StoreWriteError, "write failed for " + record_path.string());
    metas[i] = pair.corrupted.meta();
    records[i] = std::move(pair.record);
  });

  for (std::size_t i = 0; i < used.size(); ++i) {
    const auto& m = clean[i]->meta();
    result.roster.entries.push_back(
        {used[i], m.patient_id, m.modality, m.is_corrupted, m.severity_label, m.center, std::nullopt});
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& m = *metas[i];
    result.roster.entries.push_back({jobs[i].corrupted_id, m.patient_id, m.modality, true,
                                     jobs[i].level, m.center, jobs[i].clean_id});
    result.records.emplace_back(jobs[i].corrupted_id, std::move(*records[i]));
  }
  result.roster = result.roster.sorted();
  return result;
}

ArithmeticReport cohort_arithmetic_check(const SplitPlan& plan,
                                         const std::map<std::string, std::size_t>& expected) {
  ArithmeticReport report;
  auto problem = [&](std::string msg) {
    report.ok = false;
    report.problems.push_back(std::move(msg));
  };
  for (const auto& [name, count] : expected) {
    const auto it = std::find_if(plan.subsets.begin(), plan.subsets.end(),
                                 [&](const auto& s) { return s.first == name; });
    if (it == plan.subsets.end()) {
      problem("subset '" + name + "' is missing");
      continue;
    }
    if (it->second.size() != count)
      problem("subset '" + name + "' has " + std::to_string(it->second.size()) + " volumes, expected " +
              std::to_string(count));
  }
  for (std::size_t i = 0; i < plan.subsets.size(); ++i)
    for (std::size_t j = i + 1; j < plan.subsets.size(); ++j) {
      std::vector<std::string> a = plan.subsets[i].second, b = plan.subsets[j].second, both;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
      if (!both.empty())
        problem("subsets '" + plan.subsets[i].first + "' and '" + plan.subsets[j].first + "' share " +
                std::to_string(both.size()) + " volumes (first: " + both.front() + ")");
    }
  return report;
}

namespace {

Volume rotate_flip(const Volume& v, bool flip, double angle) {
  const Dims& d = v.dims();
  const double cy = (static_cast<double>(d.ny) - 1) / 2.0, cx = (static_cast<double>(d.nx) - 1) / 2.0;
  const double c = std::cos(angle), s = std::sin(angle);
  std::vector<double> out(d.count(), 0.0);
  for (std::size_t z = 0; z < d.nz; ++z)
    for (std::size_t y = 0; y < d.ny; ++y)
      for (std::size_t x = 0; x < d.nx; ++x) {
        // Inverse map: output pixel -> source location.
        const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
        const double sy = c * dy + s * dx + cy;
        double sx = -s * dy + c * dx + cx;
        if (flip) sx = static_cast<double>(d.nx) - 1 - sx;
        const double fy = std::floor(sy), fx = std::floor(sx);
        const double ty = sy - fy, tx = sx - fx;
        double acc = 0.0;
        for (int oy = 0; oy <= 1; ++oy)
          for (int ox = 0; ox <= 1; ++ox) {
            const long yy = static_cast<long>(fy) + oy, xx = static_cast<long>(fx) + ox;
            if (yy < 0 || xx < 0 || yy >= static_cast<long>(d.ny) || xx >= static_cast<long>(d.nx)) continue;
            const double w = (oy ? ty : 1 - ty) * (ox ? tx : 1 - tx);
            acc += w * v.at(z, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
          }
        out[(z * d.ny + y) * d.nx + x] = acc;
      }
  return v.with_data(std::move(out));
}

}  // namespace

std::pair<Volume, Volume> augment_pair(const Volume& a, const Volume& b, std::uint64_t seed) {
  require_same_dims(a, b, "augment_pair");
  Rng rng(seed);
  const bool flip = rng.uniform01() < 0.5;
  const double angle = rng.uniform(-5.0, 5.0) * std::numbers::pi / 180.0;
  return {rotate_flip(a, flip, angle), rotate_flip(b, flip, angle)};
}

}  // namespace motionqa
