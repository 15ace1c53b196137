#include "motionqa/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "motionqa/error.hpp"

namespace motionqa {

std::string format_full(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_fixed4(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s(buf);
  return s == "-0.0000" ? "0.0000" : s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_full(*v) : ""; }

std::optional<double> parse_opt(const std::string& field, const std::string& column) {
  if (field.empty()) return std::nullopt;
  if (field == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    fail(ErrorCode::FormatError, "column " + column + ": '" + field + "' is not a number");
  return v;
}

}  // namespace

void write_metric_rows(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << kMetricHeader << '\n';
  for (const auto& r : rows) {
    out << r.volume_id << ',' << r.method_label << ','
        << (r.psnr ? (r.psnr->is_infinite() ? std::string("inf") : format_full(r.psnr->value())) : "")
        << ',' << opt(r.ssim) << ',' << opt(r.snr) << ',' << opt(r.cnr) << ',' << opt(r.fid) << ','
        << opt(r.feature_dist) << '\n';
  }
}

std::vector<MetricRow> read_metric_rows(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::FormatError, "metrics CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricHeader) fail(ErrorCode::FormatError, "metrics CSV header mismatch");
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) fail(ErrorCode::FormatError, "metrics CSV row needs 8 fields: " + line);
    MetricRow r;
    r.volume_id = f[0];
    r.method_label = f[1];
    if (const auto p = parse_opt(f[2], "psnr"))
      r.psnr = std::isinf(*p) ? Psnr::infinite() : Psnr::decibels(*p);
    r.ssim = parse_opt(f[3], "ssim");
    r.snr = parse_opt(f[4], "snr");
    r.cnr = parse_opt(f[5], "cnr");
    r.fid = parse_opt(f[6], "fid");
    r.feature_dist = parse_opt(f[7], "feature_dist");
    rows.push_back(std::move(r));
  }
  return rows;
}

void save_metric_rows(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  write_metric_rows(out, rows);
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<MetricRow> load_metric_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
  return read_metric_rows(in);
}

void write_stat_report(std::ostream& out, const std::vector<Comparison>& rows) {
  out << kStatHeader << '\n';
  for (const auto& c : rows) {
    out << c.dataset << ',' << c.metric << ',' << c.comparison << ','
        << (c.test ? to_string(*c.test) : std::string{}) << ','
        << (c.degenerate ? std::string{} : format_full(c.statistic)) << ','
        << format_full(c.p_raw) << ',' << format_full(c.p_adjusted) << ',' << c.stars_label()
        << '\n';
  }
}

std::vector<RatingRecord> load_ratings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "group,region,subject,rater,score")
    fail(ErrorCode::FormatError, "ratings CSV header must be group,region,subject,rater,score");
  std::vector<RatingRecord> out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) fail(ErrorCode::FormatError, "ratings row needs 5 fields: " + line);
    int score = 0;
    const auto res = std::from_chars(f[4].data(), f[4].data() + f[4].size(), score);
    if (res.ec != std::errc() || res.ptr != f[4].data() + f[4].size())
      fail(ErrorCode::FormatError, "score '" + f[4] + "' is not an integer");
    out.push_back({f[0], f[1], f[2], f[3], score});
  }
  return out;
}

}  // namespace motionqa
