#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "motionqa/csv_io.hpp"
#include "motionqa/dataset.hpp"
#include "motionqa/metrics.hpp"
#include "motionqa/stats.hpp"

namespace motionqa {

inline const std::vector<std::string> kMetricNames{"psnr", "ssim", "snr", "cnr", "fid",
                                                   "feature_dist"};

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample sd, 0 when n < 2
};

Summary summarize(const std::vector<double>& values);

/// Methods x metrics, "mean (stars)" cells; the baseline row carries plain
/// means. Metrics with no values are skipped.
std::string comparison_markdown(const std::string& dataset, const std::vector<MetricRow>& baseline,
                                const std::vector<std::vector<MetricRow>>& methods,
                                const std::vector<Comparison>& comparisons);

struct SeverityCell {
  std::string modality;
  Severity severity = Severity::Mild;
  std::string method;
  std::map<std::string, Summary> metrics;
};

/// Groups rows by (modality, severity, method) through the roster. Throws
/// MissingSeverity naming the first row with no severity label.
std::vector<SeverityCell> severity_table(const std::vector<std::vector<MetricRow>>& rows,
                                         const Roster& roster);

std::string severity_markdown(const std::vector<SeverityCell>& cells);
std::string severity_csv(const std::vector<SeverityCell>& cells);

/// Line plot of the mean of one metric against severity, one series per
/// (modality, method).
std::string severity_svg(const std::vector<SeverityCell>& cells, const std::string& metric);

struct RatingSummary {
  std::string group;
  std::string region;
  std::size_t subjects = 0;
  std::size_t raters = 0;
  double rescan = 0.0;
  std::optional<IccResult> icc;  // nullopt when the table is degenerate
  std::string note;
};

/// One summary per (group, region), plus a "Global" region pooling all the
/// group's scores for the re-scan rate.
std::vector<RatingSummary> summarize_ratings(const std::vector<RatingRecord>& ratings);
std::string ratings_markdown(const std::vector<RatingSummary>& rows);

/// Absolute reduction between two re-scan rates, in percentage points.
double rescan_reduction_points(double before, double after);

}  // namespace motionqa
