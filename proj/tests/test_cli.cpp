#include <gtest/gtest.h>

#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "motionqa/container.hpp"
#include "motionqa/csv_io.hpp"
#include "motionqa/dataset.hpp"
#include "support/fixtures.hpp"

using namespace motionqa;
using motionqa::testing::make_phantom;
using motionqa::testing::TempDir;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "motionqa");
  return cli::run(args);
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

// Three clean phantoms of two patients.
void write_clean(const fs::path& dir, Dims d = {2, 32, 32}) {
  fs::create_directories(dir);
  save_volume(make_phantom(d, 1, 0.01, "pa"), dir / "clean_a");
  save_volume(make_phantom(d, 2, 0.01, "pa"), dir / "clean_b");
  save_volume(make_phantom(d, 3, 0.01, "pb"), dir / "clean_c");
}

std::string s(const fs::path& p) { return p.string(); }

}  // namespace

TEST(Cli, SimulateWritesPairsAndManifest) {
  TempDir dir("cli_sim");
  write_clean(dir / "in");
  ASSERT_EQ(run({"--seed", "42", "--out", s(dir / "out"), "simulate", "--in", s(dir / "in"), "--counts",
                 "mild=4,moderate=3,severe=3"}),
            0);
  EXPECT_EQ(list_volume_ids(dir / "out" / "corrupted").size(), 10u);
  EXPECT_EQ(list_volume_ids(dir / "out" / "clean").size(), 3u);
  const auto manifest = read_json(dir / "out" / "manifest.json");
  EXPECT_EQ(manifest["pairs"], 10);
  EXPECT_EQ(manifest["seed"], 42);
  const Roster roster = roster_from_json(read_json(dir / "out" / "roster.json"));
  EXPECT_EQ(roster.entries.size(), 13u);
  const auto cfg = read_json(dir / "out" / "config.json");
  EXPECT_EQ(cfg["command"], "simulate");
  EXPECT_EQ(cfg["toolkit_version"], cli::kToolkitVersion);
  EXPECT_EQ(cfg["global"]["seed"], "42");
  EXPECT_EQ(cfg["options"]["counts"], "mild=4,moderate=3,severe=3");
  EXPECT_FALSE(cfg["global"].contains("threads"));
  EXPECT_FALSE(cfg["global"].contains("version"));
}

TEST(Cli, SimulateZeroCountsSucceedsWithoutVolumes) {
  TempDir dir("cli_zero");
  write_clean(dir / "in");
  ASSERT_EQ(run({"--out", s(dir / "out"), "simulate", "--in", s(dir / "in"), "--counts",
                 "mild=0,moderate=0,severe=0"}),
            0);
  EXPECT_FALSE(fs::exists(dir / "out" / "corrupted"));
  EXPECT_EQ(read_json(dir / "out" / "manifest.json")["pairs"], 0);
}

TEST(Cli, MissingInputDirectoryIsIoError) {
  TempDir dir("cli_missing");
  EXPECT_EQ(run({"--out", s(dir / "out"), "simulate", "--in", s(dir / "nope"), "--counts", "mild=1"}), 3);
  EXPECT_EQ(run({"--out", s(dir / "out"), "assess", "--input", s(dir / "nope"), "--unpaired"}), 3);
}

TEST(Cli, ConfigErrors) {
  TempDir dir("cli_cfg");
  write_clean(dir / "in");
  EXPECT_EQ(run({"--out", s(dir / "out"), "simulate", "--in", s(dir / "in"), "--counts", "mild=x"}), 2);
  EXPECT_EQ(run({"--out", s(dir / "out"), "simulate", "--in", s(dir / "in"), "--phase-mode", "diagonal"}), 2);
  EXPECT_EQ(run({"simulate", "--in", s(dir / "in")}), 2);
  EXPECT_EQ(run({"--bogus"}), 2);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"--threads", "0", "--out", s(dir / "out"), "simulate", "--in", s(dir / "in")}), 2);
}

TEST(Cli, ConfigFileSuppliesOptions) {
  TempDir dir("cli_config_file");
  write_clean(dir / "in");
  std::ofstream(dir / "cfg.json") << nlohmann::json{{"seed", 7}, {"out", s(dir / "out")},
                                                    {"simulate", {{"in", s(dir / "in")}, {"counts", "severe=2"}}}}
                                         .dump();
  ASSERT_EQ(run({"--config", s(dir / "cfg.json"), "simulate"}), 0);
  EXPECT_EQ(list_volume_ids(dir / "out" / "corrupted").size(), 2u);
  EXPECT_EQ(read_json(dir / "out" / "manifest.json")["seed"], 7);
  EXPECT_EQ(run({"--config", s(dir / "missing.json"), "simulate"}), 3);
}

TEST(Cli, GroundTruthAgainstItself) {
  TempDir dir("cli_gt");
  write_clean(dir / "in");
  ASSERT_EQ(run({"--out", s(dir / "out"), "assess", "--input", s(dir / "in"), "--reference", s(dir / "in"),
                 "--label", "gt"}),
            0);
  const auto rows = load_metric_rows(dir / "out" / "metrics.csv");
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.method_label, "gt");
    ASSERT_TRUE(r.psnr.has_value());
    EXPECT_TRUE(r.psnr->is_infinite());
    EXPECT_NEAR(*r.ssim, 1.0, 1e-12);
    EXPECT_EQ(*r.feature_dist, 0.0);
    EXPECT_NEAR(*r.fid, 0.0, 1e-6);
  }
}

TEST(Cli, UnpairedAssessLeavesReferenceColumnsEmpty) {
  TempDir dir("cli_unpaired");
  write_clean(dir / "in");
  ASSERT_EQ(run({"--out", s(dir / "out"), "assess", "--input", s(dir / "in"), "--unpaired", "--name", "u.csv"}), 0);
  const auto rows = load_metric_rows(dir / "out" / "u.csv");
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_FALSE(r.psnr.has_value());
    EXPECT_FALSE(r.ssim.has_value());
    EXPECT_FALSE(r.fid.has_value());
    EXPECT_TRUE(r.snr.has_value());
  }
  EXPECT_EQ(read_json(dir / "out" / "config.json")["options"]["unpaired"], true);
}

TEST(Cli, MissingOrMisshapenReferenceIsMissingPair) {
  TempDir dir("cli_pair");
  write_clean(dir / "in");
  fs::create_directories(dir / "ref");
  save_volume(make_phantom({2, 32, 32}, 1, 0.01, "pa"), dir / "ref" / "clean_a");
  EXPECT_EQ(run({"--out", s(dir / "out"), "assess", "--input", s(dir / "in"), "--reference", s(dir / "ref")}), 4);
  save_volume(make_phantom({2, 32, 32}, 2, 0.01, "pa"), dir / "ref" / "clean_b");
  save_volume(make_phantom({2, 32, 24}, 3, 0.01, "pb"), dir / "ref" / "clean_c");
  EXPECT_EQ(run({"--out", s(dir / "out"), "assess", "--input", s(dir / "in"), "--reference", s(dir / "ref")}), 4);
}

TEST(Cli, EndToEndCompareAndReport) {
  TempDir dir("cli_e2e");
  write_clean(dir / "in");
  const fs::path sim = dir / "sim";
  ASSERT_EQ(run({"--seed", "3", "--out", s(sim), "simulate", "--in", s(dir / "in"), "--counts",
                 "mild=3,moderate=3,severe=3"}),
            0);
  const std::string roster = s(sim / "roster.json");
  ASSERT_EQ(run({"--out", s(dir / "m"), "assess", "--input", s(sim / "corrupted"), "--reference",
                 s(sim / "clean"), "--roster", roster, "--label", "corrupted", "--name", "corrupted.csv"}),
            0);
  // A "method" that returns the clean volume under the corrupted id.
  fs::create_directories(dir / "restored");
  for (const auto& e : roster_from_json(read_json(sim / "roster.json")).entries)
    if (e.reference_id) {
      Volume v = load_volume(sim / "clean" / *e.reference_id);
      save_volume(v, dir / "restored" / e.volume_id);
    }
  ASSERT_EQ(run({"--out", s(dir / "m"), "assess", "--input", s(dir / "restored"), "--reference",
                 s(sim / "clean"), "--roster", roster, "--label", "restored", "--name", "restored.csv"}),
            0);
  ASSERT_EQ(run({"--out", s(dir / "cmp"), "compare", "--baseline", s(dir / "m" / "corrupted.csv"), "--methods",
                 s(dir / "m" / "restored.csv"), "--dataset", "phantom"}),
            0);
  std::ifstream stat(dir / "cmp" / "stat_report.csv");
  std::string header;
  std::getline(stat, header);
  EXPECT_EQ(header, kStatHeader);
  EXPECT_TRUE(fs::exists(dir / "cmp" / "comparison.md"));

  ASSERT_EQ(run({"--out", s(dir / "rep"), "report", "--metrics", s(dir / "m" / "corrupted.csv"),
                 s(dir / "m" / "restored.csv"), "--roster", roster}),
            0);
  EXPECT_TRUE(fs::exists(dir / "rep" / "severity_table.md"));
  EXPECT_TRUE(fs::exists(dir / "rep" / "severity_table.csv"));
  EXPECT_TRUE(fs::exists(dir / "rep" / "ssim_vs_severity.svg"));

  // The corrupted rows trace a falling SSIM curve over severity.
  std::ifstream table(dir / "rep" / "severity_table.csv");
  std::map<std::string, double> ssim_by_level;
  std::string line;
  while (std::getline(table, line)) {
    const auto f = split_csv_line(line);
    if (f.size() == 7 && f[2] == "corrupted" && f[3] == "ssim") ssim_by_level[f[1]] = std::stod(f[5]);
  }
  ASSERT_EQ(ssim_by_level.size(), 3u);
  EXPECT_GT(ssim_by_level["mild"], ssim_by_level["moderate"]);
  EXPECT_GT(ssim_by_level["moderate"], ssim_by_level["severe"]);
}

TEST(Cli, CompareMismatchedCohorts) {
  TempDir dir("cli_cohort");
  std::vector<MetricRow> a(8), b(8);
  for (int i = 0; i < 8; ++i) {
    a[i].volume_id = "v" + std::to_string(i);
    a[i].method_label = "base";
    a[i].ssim = 0.5 + 0.01 * i;
    b[i] = a[i];
    b[i].method_label = "m";
  }
  b[7].volume_id = "other";
  fs::create_directories(dir.path());
  save_metric_rows(dir / "a.csv", a);
  save_metric_rows(dir / "b.csv", b);
  EXPECT_EQ(run({"--out", s(dir / "o"), "compare", "--baseline", s(dir / "a.csv"), "--methods", s(dir / "b.csv")}),
            5);
}

TEST(Cli, ReportWithoutSeverityLabels) {
  TempDir dir("cli_sev");
  MetricRow r;
  r.volume_id = "clean_a";
  r.method_label = "gt";
  r.ssim = 1.0;
  save_metric_rows(dir / "m.csv", {r});
  Roster roster;
  roster.entries.push_back({"clean_a", "pa", Modality::T1, false, std::nullopt, "c", {}});
  std::ofstream(dir / "roster.json") << roster_to_json(roster).dump();
  EXPECT_EQ(run({"--out", s(dir / "o"), "report", "--metrics", s(dir / "m.csv"), "--roster", s(dir / "roster.json")}),
            6);
}

TEST(Cli, ReportRatingsSummary) {
  TempDir dir("cli_ratings");
  std::ofstream ratings(dir / "r.csv");
  ratings << "group,region,subject,rater,score\n";
  for (int subj = 1; subj <= 5; ++subj)
    for (int rater = 1; rater <= 2; ++rater)
      ratings << "model,A1,s" << subj << ",r" << rater << ',' << subj << '\n';
  ratings.close();
  MetricRow r;
  r.volume_id = "v";
  r.method_label = "m";
  r.ssim = 0.9;
  save_metric_rows(dir / "m.csv", {r});
  Roster roster;
  roster.entries.push_back({"v", "p", Modality::T1, true, Severity::Mild, "c", {}});
  std::ofstream(dir / "roster.json") << roster_to_json(roster).dump();
  ASSERT_EQ(run({"--out", s(dir / "o"), "report", "--metrics", s(dir / "m.csv"), "--roster",
                 s(dir / "roster.json"), "--ratings", s(dir / "r.csv")}),
            0);
  std::ifstream in(dir / "o" / "ratings_summary.md");
  const std::string md{std::istreambuf_iterator<char>(in), {}};
  EXPECT_NE(md.find("40.0000%"), std::string::npos) << md;
}

TEST(Cli, SplitPolicies) {
  TempDir dir("cli_split");
  Roster roster;
  for (int i = 0; i < 10; ++i)
    roster.entries.push_back({"v" + std::to_string(i), "p" + std::to_string(i), Modality::T1, i % 2 == 0,
                              i % 2 == 0 ? std::optional<Severity>(Severity::Mild) : std::nullopt, "c", {}});
  std::ofstream(dir / "roster.json") << roster_to_json(roster).dump();
  ASSERT_EQ(run({"--out", s(dir / "p"), "split", "--roster", s(dir / "roster.json"), "--policy", "patient"}), 0);
  const auto plan = plan_from_json(read_json(dir / "p" / "split_plan.json"));
  EXPECT_EQ(plan.subset("train").size(), 7u);
  ASSERT_EQ(run({"--out", s(dir / "s"), "split", "--roster", s(dir / "roster.json"), "--policy", "stratified",
                 "--key", "is_corrupted", "--fraction", "0.6"}),
            0);
  EXPECT_EQ(plan_from_json(read_json(dir / "s" / "split_plan.json")).subset("train").size(), 6u);
  ASSERT_EQ(run({"--out", s(dir / "b"), "split", "--roster", s(dir / "roster.json"), "--policy", "balance",
                 "--key", "is_corrupted"}),
            0);
  EXPECT_EQ(roster_from_json(read_json(dir / "b" / "balanced_roster.json")).entries.size(), 10u);
  EXPECT_EQ(run({"--out", s(dir / "x"), "split", "--roster", s(dir / "roster.json"), "--policy", "balance",
                 "--key", "center"}),
            2);
  EXPECT_EQ(run({"--out", s(dir / "x"), "split", "--roster", s(dir / "roster.json"), "--policy", "random"}), 2);
}

TEST(Cli, OutputsIdenticalAcrossThreadCounts) {
  TempDir dir("cli_threads");
  write_clean(dir / "in");
  // Same output path for both runs, since config.json records it.
  const fs::path out = dir / "run";
  for (const char* t : {"1", "4"}) {
    ASSERT_EQ(run({"--seed", "9", "--threads", t, "--out", s(out), "simulate", "--in", s(dir / "in"), "--counts",
                   "mild=2,severe=2"}),
              0);
    ASSERT_EQ(run({"--threads", t, "--out", s(out / "m"), "assess", "--input", s(out / "corrupted"),
                   "--reference", s(out / "clean"), "--roster", s(out / "roster.json")}),
              0);
    fs::rename(out, dir / (std::string("t") + t));
  }
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "t1")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir / "t1");
    std::ifstream a(e.path(), std::ios::binary), b(dir / "t4" / rel, std::ios::binary);
    const std::string sa{std::istreambuf_iterator<char>(a), {}}, sb{std::istreambuf_iterator<char>(b), {}};
    EXPECT_EQ(sa, sb) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 10u);
}
