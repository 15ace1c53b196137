#include "motionqa/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "motionqa/error.hpp"

namespace motionqa {

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

namespace {

// Mean over rows; +inf when every value is infinite (PSNR of identical
// pairs), nullopt when the column is empty.
std::optional<double> column_mean(const std::vector<MetricRow>& rows, const std::string& metric) {
  std::vector<double> finite;
  bool any_inf = false;
  for (const auto& r : rows) {
    if (metric == "psnr" && r.psnr && r.psnr->is_infinite()) {
      any_inf = true;
      continue;
    }
    if (auto v = metric_value(r, metric)) finite.push_back(*v);
  }
  if (finite.empty()) {
    if (any_inf) return std::numeric_limits<double>::infinity();
    return std::nullopt;
  }
  return summarize(finite).mean;
}

std::string label_of(const std::vector<MetricRow>& rows) {
  return rows.empty() ? std::string("(empty)") : rows.front().method_label;
}

}  // namespace

std::string comparison_markdown(const std::string& dataset, const std::vector<MetricRow>& baseline,
                                const std::vector<std::vector<MetricRow>>& methods,
                                const std::vector<Comparison>& comparisons) {
  std::vector<std::string> metrics;
  for (const auto& m : kMetricNames) {
    bool present = column_mean(baseline, m).has_value();
    for (const auto& rows : methods) present = present || column_mean(rows, m).has_value();
    if (present) metrics.push_back(m);
  }
  std::ostringstream out;
  out << "## " << (dataset.empty() ? std::string("comparison") : dataset) << "\n\n| method |";
  for (const auto& m : metrics) out << ' ' << m << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < metrics.size(); ++i) out << "---|";
  out << '\n';

  auto cell = [](const std::optional<double>& v) { return v ? format_fixed4(*v) : std::string{}; };
  out << "| " << label_of(baseline) << " |";
  for (const auto& m : metrics) out << ' ' << cell(column_mean(baseline, m)) << " |";
  out << '\n';
  for (const auto& rows : methods) {
    const std::string comparison = label_of(rows) + " vs " + label_of(baseline);
    out << "| " << label_of(rows) << " |";
    for (const auto& m : metrics) {
      const auto v = column_mean(rows, m);
      std::string text = cell(v);
      for (const auto& c : comparisons)
        if (c.metric == m && c.comparison == comparison && v) text += " (" + c.stars_label() + ")";
      out << ' ' << text << " |";
    }
    out << '\n';
  }
  return out.str();
}

std::vector<SeverityCell> severity_table(const std::vector<std::vector<MetricRow>>& rows,
                                         const Roster& roster) {
  using Key = std::tuple<std::string, int, std::string>;
  std::map<Key, std::map<std::string, std::vector<double>>> groups;
  for (const auto& method_rows : rows)
    for (const auto& r : method_rows) {
      const RosterEntry* e = roster.find(r.volume_id);
      if (!e || !e->severity_label)
        fail(ErrorCode::MissingSeverity, "volume '" + r.volume_id + "' has no severity label");
      auto& g = groups[{to_string(e->modality), static_cast<int>(*e->severity_label), r.method_label}];
      for (const auto& m : kMetricNames) {
        g[m];
        if (auto v = metric_value(r, m)) g[m].push_back(*v);
      }
    }
  std::vector<SeverityCell> cells;
  for (const auto& [key, metrics] : groups) {
    SeverityCell c;
    c.modality = std::get<0>(key);
    c.severity = static_cast<Severity>(std::get<1>(key));
    c.method = std::get<2>(key);
    for (const auto& [name, values] : metrics) c.metrics[name] = summarize(values);
    cells.push_back(std::move(c));
  }
  return cells;
}

namespace {

std::vector<std::string> populated_metrics(const std::vector<SeverityCell>& cells) {
  std::vector<std::string> out;
  for (const auto& m : kMetricNames)
    for (const auto& c : cells)
      if (c.metrics.contains(m) && c.metrics.at(m).n > 0) {
        out.push_back(m);
        break;
      }
  return out;
}

}  // namespace

std::string severity_markdown(const std::vector<SeverityCell>& cells) {
  const auto metrics = populated_metrics(cells);
  std::ostringstream out;
  out << "| modality | severity | method | n |";
  for (const auto& m : metrics) out << ' ' << m << " |";
  out << "\n|---|---|---|---|";
  for (std::size_t i = 0; i < metrics.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& c : cells) {
    std::size_t n = 0;
    for (const auto& [name, s] : c.metrics) n = std::max(n, s.n);
    out << "| " << c.modality << " | " << to_string(c.severity) << " | " << c.method << " | " << n
        << " |";
    for (const auto& m : metrics) {
      const auto it = c.metrics.find(m);
      if (it == c.metrics.end() || it->second.n == 0) out << "  |";
      else out << ' ' << format_fixed4(it->second.mean) << " ± " << format_fixed4(it->second.sd) << " |";
    }
    out << '\n';
  }
  return out.str();
}

std::string severity_csv(const std::vector<SeverityCell>& cells) {
  std::ostringstream out;
  out << "modality,severity,method,metric,n,mean,sd\n";
  for (const auto& c : cells)
    for (const auto& [name, s] : c.metrics) {
      if (s.n == 0) continue;
      out << c.modality << ',' << to_string(c.severity) << ',' << c.method << ',' << name << ','
          << s.n << ',' << format_full(s.mean) << ',' << format_full(s.sd) << '\n';
    }
  return out.str();
}

std::string severity_svg(const std::vector<SeverityCell>& cells, const std::string& metric) {
  constexpr double width = 480, height = 320, left = 70, right = 150, top = 30, bottom = 50;
  std::map<std::string, std::map<int, double>> series;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : cells) {
    const auto it = c.metrics.find(metric);
    if (it == c.metrics.end() || it->second.n == 0 || !std::isfinite(it->second.mean)) continue;
    series[c.modality + " " + c.method][static_cast<int>(c.severity)] = it->second.mean;
    lo = std::min(lo, it->second.mean);
    hi = std::max(hi, it->second.mean);
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  auto px = [&](int sev) { return left + plot_w * sev / 2.0; };
  auto py = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(left) << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">"
      << metric << " vs severity</text>\n";
  out << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + plot_h) << "\" x2=\"" << num(left + plot_w)
      << "\" y2=\"" << num(top + plot_h) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
      << num(top + plot_h) << "\" stroke=\"black\"/>\n";
  for (int s = 0; s < 3; ++s)
    out << "<text x=\"" << num(px(s)) << "\" y=\"" << num(top + plot_h + 20)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << to_string(static_cast<Severity>(s)) << "</text>\n";
  for (double v : {lo, (lo + hi) / 2.0, hi})
    out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(v) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << format_fixed4(v)
        << "</text>\n";
  std::size_t idx = 0;
  for (const auto& [name, points] : series) {
    const char* color = palette[idx % std::size(palette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const auto& [sev, mean] : points) {
      out << (first ? "" : " ") << num(px(sev)) << ',' << num(py(mean));
      first = false;
    }
    out << "\"/>\n";
    for (const auto& [sev, mean] : points)
      out << "<circle cx=\"" << num(px(sev)) << "\" cy=\"" << num(py(mean)) << "\" r=\"3\" fill=\""
          << color << "\"><title>" << format_fixed4(mean) << "</title></circle>\n";
    out << "<text x=\"" << num(left + plot_w + 10) << "\" y=\"" << num(top + 14.0 * static_cast<double>(idx) + 10)
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">" << name
        << "</text>\n";
    ++idx;
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<RatingSummary> summarize_ratings(const std::vector<RatingRecord>& ratings) {
  if (ratings.empty()) fail(ErrorCode::EmptyInput, "no ratings supplied");
  std::map<std::pair<std::string, std::string>, std::vector<const RatingRecord*>> tables;
  std::map<std::string, std::vector<int>> global;
  for (const auto& r : ratings) {
    tables[{r.group, r.region}].push_back(&r);
    global[r.group].push_back(r.score);
  }
  std::vector<RatingSummary> out;
  for (const auto& [key, recs] : tables) {
    std::set<std::string> subject_ids, rater_ids;
    for (const auto* r : recs) {
      subject_ids.insert(r->subject);
      rater_ids.insert(r->rater);
    }
    const std::vector<std::string> subjects(subject_ids.begin(), subject_ids.end());
    const std::vector<std::string> raters(rater_ids.begin(), rater_ids.end());
    RatingTable table;
    table.region = key.second;
    table.scores.assign(subjects.size(), std::vector<int>(raters.size(), 0));
    std::vector<int> flat;
    for (const auto* r : recs) {
      const auto si = static_cast<std::size_t>(
          std::lower_bound(subjects.begin(), subjects.end(), r->subject) - subjects.begin());
      const auto ri = static_cast<std::size_t>(
          std::lower_bound(raters.begin(), raters.end(), r->rater) - raters.begin());
      table.scores[si][ri] = r->score;
      flat.push_back(r->score);
    }
    RatingSummary s;
    s.group = key.first;
    s.region = key.second;
    s.subjects = subjects.size();
    s.raters = raters.size();
    s.rescan = rescan_rate(flat);
    try {
      for (const auto& row : table.scores)
        for (int v : row)
          if (v == 0) fail(ErrorCode::InvalidArgument, "incomplete rating table");
      s.icc = icc_absolute_agreement(table);
    } catch (const Error& e) {
      s.note = e.code() == ErrorCode::DegenerateTable ? "ICC degenerate (no score variance)"
                                                      : std::string(e.what());
    }
    out.push_back(std::move(s));
  }
  for (const auto& [group, scores] : global) {
    RatingSummary s;
    s.group = group;
    s.region = "Global";
    s.rescan = rescan_rate(scores);
    s.note = "re-scan rate over all regions";
    out.push_back(std::move(s));
  }
  return out;
}

std::string ratings_markdown(const std::vector<RatingSummary>& rows) {
  std::ostringstream out;
  out << "| group | region | subjects | raters | re-scan rate | ICC(A,1) | 95% CI | note |\n"
      << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out << "| " << r.group << " | " << r.region << " | " << r.subjects << " | " << r.raters << " | "
        << format_fixed4(100.0 * r.rescan) << "% | ";
    if (r.icc)
      out << format_fixed4(r.icc->icc) << " | " << format_fixed4(r.icc->ci_lo) << " to "
          << format_fixed4(r.icc->ci_hi);
    else
      out << " | ";
    out << " | " << r.note << " |\n";
  }
  return out.str();
}

double rescan_reduction_points(double before, double after) { return 100.0 * (before - after); }

}  // namespace motionqa
