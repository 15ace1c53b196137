#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "motionqa/container.hpp"
#include "motionqa/csv_io.hpp"
#include "motionqa/dataset.hpp"
#include "motionqa/error.hpp"
#include "motionqa/metrics.hpp"
#include "motionqa/motion_sim.hpp"
#include "motionqa/parallel.hpp"
#include "motionqa/perceptual.hpp"
#include "motionqa/report.hpp"
#include "motionqa/roi.hpp"
#include "motionqa/stats.hpp"

namespace motionqa::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads --config files. Top-level keys set global options; an object keyed
// by a subcommand name sets that subcommand's options.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    return flatten(j, "", {});
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  std::vector<CLI::ConfigItem> flatten(const json& j, const std::string& name,
                                       std::vector<std::string> prefix) const {
    std::vector<CLI::ConfigItem> out;
    if (j.is_object()) {
      if (!name.empty()) prefix.push_back(name);
      for (const auto& [key, value] : j.items()) {
        auto sub = flatten(value, key, prefix);
        out.insert(out.end(), sub.begin(), sub.end());
      }
      return out;
    }
    CLI::ConfigItem item;
    item.name = name;
    item.parents = prefix;
    if (j.is_array())
      for (const auto& v : j) item.inputs.push_back(scalar(v));
    else
      item.inputs.push_back(scalar(j));
    out.push_back(std::move(item));
    return out;
  }
};

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string out;
};

struct SimulateOptions {
  std::string in;
  std::string counts = "mild=0,moderate=0,severe=0";
  std::string phase_mode = "line";
  std::string sampling = "random";
};

struct AssessOptions {
  std::string input;
  std::string reference;
  std::string roster;
  std::string label = "method";
  std::string extractor;
  std::string output = "metrics.csv";
  bool unpaired = false;
};

struct CompareOptions {
  std::string baseline;
  std::vector<std::string> methods;
  std::string dataset = "dataset";
};

struct SplitOptions {
  std::string roster;
  std::string policy = "patient";
  std::string fractions = "train=0.7,validation=0.3";
  std::string key = "is_corrupted";
  double fraction = 0.7;
};

struct ReportOptions {
  std::vector<std::string> metrics;
  std::string roster;
  std::string ratings;
};

class CommandError : public std::runtime_error {
 public:
  CommandError(int code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CommandError(kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw CommandError(kIoError, "write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CommandError(kIoError, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CommandError(kConfigError, path.string() + ": " + e.what());
  }
}

fs::path prepare_out(const GlobalOptions& g) {
  if (g.out.empty()) throw CommandError(kConfigError, "--out is required");
  try {
    fs::create_directories(g.out);
  } catch (const fs::filesystem_error& e) {
    throw CommandError(kIoError, e.what());
  }
  return fs::path(g.out);
}

// Effective configuration of the invoked command. --threads and --config
// are left out: neither changes any output.
void echo_config(const fs::path& out, const CLI::App& app, const CLI::App& sub) {
  json cfg;
  cfg["toolkit_version"] = kToolkitVersion;
  cfg["command"] = sub.get_name();
  auto dump_options = [](const CLI::App& a, json& dst) {
    for (const CLI::Option* opt : a.get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "version" || name == "config" || name == "threads")
        continue;
      const auto& results = opt->results();
      if (opt->get_expected_max() == 0) {
        dst[name] = opt->count() > 0;
      } else if (!results.empty()) {
        dst[name] = results.size() == 1 ? json(results.front()) : json(results);
      } else {
        dst[name] = opt->get_default_str();
      }
    }
  };
  json global, command;
  dump_options(app, global);
  dump_options(sub, command);
  cfg["global"] = global;
  cfg["options"] = command;
  write_text(out / "config.json", cfg.dump(2) + "\n");
}

int cmd_simulate(const GlobalOptions& g, const SimulateOptions& o) {
  if (o.in.empty()) throw CommandError(kConfigError, "simulate needs --in");
  SeverityCounts counts;
  SimulationOptions sim;
  try {
    counts = parse_severity_counts(o.counts);
  } catch (const Error& e) {
    throw CommandError(kConfigError, e.what());
  }
  if (o.phase_mode == "sample") sim.phase_mode = PhaseMode::PerSample;
  else if (o.phase_mode != "line") throw CommandError(kConfigError, "--phase-mode must be line or sample");
  if (o.sampling == "equispaced") sim.sampling_mode = SamplingMode::Equispaced;
  else if (o.sampling != "random") throw CommandError(kConfigError, "--sampling must be random or equispaced");
  if (!fs::is_directory(o.in)) throw CommandError(kIoError, "input directory not found: " + o.in);

  const fs::path out = prepare_out(g);
  const auto ids = list_volume_ids(o.in);
  const auto corpus = build_simulated_corpus(ids, counts, g.seed, o.in, out, g.threads, sim);
  write_text(out / "roster.json", roster_to_json(corpus.roster).dump(2) + "\n");

  json profiles = json::object();
  for (Severity s : kAllSeverities) {
    const auto p = severity_params(s);
    profiles[to_string(s)] = {{"phase_bound", p.phase_bound}, {"retain_ratio_range", {p.retain_lo, p.retain_hi}}};
  }
  json manifest{{"toolkit_version", kToolkitVersion},
                {"seed", g.seed},
                {"seed_derivation", "seed + job_index"},
                {"phase_mode", o.phase_mode},
                {"sampling", o.sampling},
                {"profiles", profiles},
                {"pairs", corpus.records.size()}};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return kOk;
}

FeatureExtractor extractor_for(const GlobalOptions& g, const std::string& stem) {
  if (stem.empty()) return FeatureExtractor::deep_tap(g.seed);
  return FeatureExtractor::load(stem);
}

MetricRow assess_one(const std::string& id, const std::string& label, const Volume& input,
                     const Volume* reference, const FeatureExtractor& ex) {
  MetricRow row;
  row.volume_id = id;
  row.method_label = label;
  // A volume without a usable background or tissue split leaves the cell blank.
  auto region_metric = [](auto&& f) -> std::optional<double> {
    try {
      return f();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyRegion && e.code() != ErrorCode::DegenerateBackground) throw;
      return std::nullopt;
    }
  };
  row.snr = region_metric([&] { return snr(input, RoiSpec::automatic()); });
  row.cnr = region_metric([&] { return cnr(input, RoiSpec::automatic()); });
  if (!reference) return row;
  if (input.dims() != reference->dims())
    throw CommandError(kMissingPair, "dims mismatch for volume '" + id + "': " +
                                         to_string(input.dims()) + " vs " + to_string(reference->dims()));
  row.psnr = psnr(input, *reference);
  row.ssim = ssim(input, *reference);
  row.feature_dist = feature_distance(ex, input, *reference);
  if (input.dims().nz >= 2) row.fid = fid(pooled_features(ex, input), pooled_features(ex, *reference));
  return row;
}

int cmd_assess(const GlobalOptions& g, const AssessOptions& o) {
  if (o.input.empty()) throw CommandError(kConfigError, "assess needs --input");
  if (!o.unpaired && o.reference.empty())
    throw CommandError(kConfigError, "assess needs --reference unless --unpaired is given");
  if (!fs::is_directory(o.input)) throw CommandError(kIoError, "input directory not found: " + o.input);
  if (!o.unpaired && !fs::is_directory(o.reference))
    throw CommandError(kIoError, "reference directory not found: " + o.reference);

  std::optional<Roster> roster;
  if (!o.roster.empty()) roster = roster_from_json(read_json(o.roster));
  const fs::path out = prepare_out(g);
  const FeatureExtractor ex = extractor_for(g, o.extractor);
  const auto ids = list_volume_ids(o.input);

  std::vector<std::string> ref_ids(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ref_ids[i] = ids[i];
    if (roster)
      if (const auto* e = roster->find(ids[i]); e && e->reference_id) ref_ids[i] = *e->reference_id;
    if (!o.unpaired && !volume_exists(fs::path(o.reference) / ref_ids[i]))
      throw CommandError(kMissingPair, "no reference volume for '" + ids[i] + "' (looked for '" +
                                           ref_ids[i] + "')");
  }

  std::vector<std::optional<MetricRow>> rows(ids.size());
  parallel_for(ids.size(), g.threads, [&](std::size_t i) {
    const Volume input = load_volume(fs::path(o.input) / ids[i]);
    if (o.unpaired) {
      rows[i] = assess_one(ids[i], o.label, input, nullptr, ex);
    } else {
      const Volume ref = load_volume(fs::path(o.reference) / ref_ids[i]);
      rows[i] = assess_one(ids[i], o.label, input, &ref, ex);
    }
  });
  std::vector<MetricRow> result;
  for (auto& r : rows) result.push_back(std::move(*r));
  save_metric_rows(out / o.output, result);
  return kOk;
}

int cmd_compare(const GlobalOptions& g, const CompareOptions& o) {
  if (o.baseline.empty() || o.methods.empty())
    throw CommandError(kConfigError, "compare needs --baseline and at least one --methods CSV");
  const auto baseline = load_metric_rows(o.baseline);
  std::vector<std::vector<MetricRow>> methods;
  for (const auto& m : o.methods) methods.push_back(load_metric_rows(m));
  const fs::path out = prepare_out(g);

  std::vector<Comparison> all;
  for (const auto& metric : kMetricNames) {
    bool present = false;
    for (const auto& r : baseline) present = present || metric_value(r, metric).has_value();
    if (!present) continue;
    try {
      auto family = compare_family(o.dataset, metric, baseline, methods);
      all.insert(all.end(), family.begin(), family.end());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MismatchedCohorts) throw CommandError(kCohortMismatch, e.what());
      throw;
    }
  }
  std::ostringstream csv;
  write_stat_report(csv, all);
  write_text(out / "stat_report.csv", csv.str());
  write_text(out / "comparison.md", comparison_markdown(o.dataset, baseline, methods, all));
  return kOk;
}

int cmd_split(const GlobalOptions& g, const SplitOptions& o) {
  if (o.roster.empty()) throw CommandError(kConfigError, "split needs --roster");
  const Roster roster = roster_from_json(read_json(o.roster));
  const fs::path out = prepare_out(g);
  if (o.policy == "patient") {
    NamedFractions fractions;
    std::stringstream ss(o.fractions);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw CommandError(kConfigError, "fraction '" + item + "' needs name=value");
      try {
        fractions.emplace_back(item.substr(0, eq), std::stod(item.substr(eq + 1)));
      } catch (const std::exception&) {
        throw CommandError(kConfigError, "fraction '" + item + "' is not numeric");
      }
    }
    const auto plan = patient_level_split(roster, fractions, g.seed);
    write_text(out / "split_plan.json", plan_to_json(plan).dump(2) + "\n");
  } else if (o.policy == "stratified") {
    const auto plan = stratified_split(roster, parse_roster_field(o.key), o.fraction, g.seed);
    write_text(out / "split_plan.json", plan_to_json(plan).dump(2) + "\n");
  } else if (o.policy == "balance") {
    const auto balanced = balanced_undersample(roster, parse_roster_field(o.key), g.seed);
    write_text(out / "balanced_roster.json", roster_to_json(balanced).dump(2) + "\n");
  } else {
    throw CommandError(kConfigError, "--policy must be patient, stratified or balance");
  }
  return kOk;
}

int cmd_report(const GlobalOptions& g, const ReportOptions& o) {
  if (o.metrics.empty() || o.roster.empty())
    throw CommandError(kConfigError, "report needs --metrics and --roster");
  const Roster roster = roster_from_json(read_json(o.roster));
  std::vector<std::vector<MetricRow>> rows;
  for (const auto& m : o.metrics) rows.push_back(load_metric_rows(m));
  std::optional<std::vector<RatingRecord>> ratings;
  if (!o.ratings.empty()) ratings = load_ratings(o.ratings);
  const fs::path out = prepare_out(g);

  std::vector<SeverityCell> cells;
  try {
    cells = severity_table(rows, roster);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MissingSeverity) throw CommandError(kMissingSeverity, e.what());
    throw;
  }
  write_text(out / "severity_table.md", severity_markdown(cells));
  write_text(out / "severity_table.csv", severity_csv(cells));
  for (const auto& metric : kMetricNames) {
    bool present = false;
    for (const auto& c : cells)
      if (c.metrics.contains(metric) && c.metrics.at(metric).n > 0) present = true;
    if (present) write_text(out / (metric + "_vs_severity.svg"), severity_svg(cells, metric));
  }
  if (ratings) write_text(out / "ratings_summary.md", ratings_markdown(summarize_ratings(*ratings)));
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::IoError:
    case ErrorCode::StoreWriteError:
    case ErrorCode::MissingVolume: return kIoError;
    case ErrorCode::DimMismatch: return kMissingPair;
    case ErrorCode::MismatchedCohorts: return kCohortMismatch;
    case ErrorCode::MissingSeverity: return kMissingSeverity;
    case ErrorCode::FormatError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InsufficientPatients:
    case ErrorCode::EmptyStratum:
    case ErrorCode::SingleClass: return kConfigError;
    default: return kInternalError;
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"motionqa: MRI motion-artifact simulation, quality metrics and statistics"};
  app.set_version_flag("--version", kToolkitVersion);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values");

  GlobalOptions g;
  app.add_option("--seed", g.seed, "64-bit base seed");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--out", g.out, "output directory");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "corrupt clean volumes at calibrated severities");
  simulate->fallthrough();
  simulate->add_option("--in", sim.in, "directory of clean MRIF volumes");
  simulate->add_option("--counts", sim.counts, "pairs per level, e.g. mild=4,moderate=3,severe=3");
  simulate->add_option("--phase-mode", sim.phase_mode, "line or sample");
  simulate->add_option("--sampling", sim.sampling, "random or equispaced");

  AssessOptions as;
  auto* assess = app.add_subcommand("assess", "compute PSNR/SSIM/SNR/CNR/FID per volume");
  assess->fallthrough();
  assess->add_option("--input", as.input, "directory of volumes to assess");
  assess->add_option("--reference", as.reference, "directory of ground-truth volumes");
  assess->add_option("--roster", as.roster, "roster mapping input ids to reference ids");
  assess->add_option("--label", as.label, "method label written to every row");
  assess->add_option("--extractor", as.extractor, "feature extractor weights stem");
  assess->add_option("--name", as.output, "output CSV file name");
  assess->add_flag("--unpaired", as.unpaired, "no ground truth: SNR and CNR only");

  CompareOptions cmp;
  auto* compare = app.add_subcommand("compare", "paired statistics against a baseline");
  compare->fallthrough();
  compare->add_option("--baseline", cmp.baseline, "baseline metrics CSV");
  compare->add_option("--methods", cmp.methods, "method metrics CSVs");
  compare->add_option("--dataset", cmp.dataset, "dataset name for the report");

  SplitOptions sp;
  auto* split = app.add_subcommand("split", "patient-level, stratified or balanced partitioning");
  split->fallthrough();
  split->add_option("--roster", sp.roster, "roster JSON");
  split->add_option("--policy", sp.policy, "patient, stratified or balance");
  split->add_option("--fractions", sp.fractions, "patient policy: name=fraction list");
  split->add_option("--key", sp.key, "stratum / class field");
  split->add_option("--fraction", sp.fraction, "stratified policy: share of the first subset");

  ReportOptions rep;
  auto* report = app.add_subcommand("report", "severity-stratified tables, plots and rating summaries");
  report->fallthrough();
  report->add_option("--metrics", rep.metrics, "metrics CSVs");
  report->add_option("--roster", rep.roster, "roster JSON with severity labels");
  report->add_option("--ratings", rep.ratings, "ratings CSV (group,region,subject,rater,score)");

  std::vector<std::string> argv_rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv_rest.begin(), argv_rest.end());
  try {
    app.parse(argv_rest);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    std::cerr << "motionqa: error: " << e.what() << std::endl;
    return kIoError;
  } catch (const CLI::ParseError& e) {
    std::cerr << "motionqa: error: " << e.what() << std::endl;
    return kConfigError;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    int code = kOk;
    if (sub == simulate) code = cmd_simulate(g, sim);
    else if (sub == assess) code = cmd_assess(g, as);
    else if (sub == compare) code = cmd_compare(g, cmp);
    else if (sub == split) code = cmd_split(g, sp);
    else if (sub == report) code = cmd_report(g, rep);
    if (code == kOk) echo_config(fs::path(g.out), app, *sub);
    return code;
  } catch (const CommandError& e) {
    std::cerr << "motionqa: error: " << e.what() << std::endl;
    return e.code();
  } catch (const Error& e) {
    std::cerr << "motionqa: error: " << e.what() << std::endl;
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "motionqa: error: " << e.what() << std::endl;
    return kInternalError;
  }
}

}  // namespace motionqa::cli
