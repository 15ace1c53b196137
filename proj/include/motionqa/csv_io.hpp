#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "motionqa/metrics.hpp"
#include "motionqa/stats.hpp"

namespace motionqa {

/// Shortest decimal text that parses back to the same double.
std::string format_full(double v);
/// Fixed four decimals, "inf" for +infinity.
std::string format_fixed4(double v);

std::vector<std::string> split_csv_line(const std::string& line);

inline constexpr const char* kMetricHeader =
    "volume_id,method_label,psnr,ssim,snr,cnr,fid,feature_dist";
inline constexpr const char* kStatHeader =
    "dataset,metric,comparison,test,statistic,p_raw,p_adjusted,stars";

void write_metric_rows(std::ostream& out, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metric_rows(std::istream& in);
void save_metric_rows(const std::filesystem::path& path, const std::vector<MetricRow>& rows);
std::vector<MetricRow> load_metric_rows(const std::filesystem::path& path);

void write_stat_report(std::ostream& out, const std::vector<Comparison>& rows);

struct RatingRecord {
  std::string group;
  std::string region;
  std::string subject;
  std::string rater;
  int score = 0;
};

/// CSV with header group,region,subject,rater,score.
std::vector<RatingRecord> load_ratings(const std::filesystem::path& path);

}  // namespace motionqa
