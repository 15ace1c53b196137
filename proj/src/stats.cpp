#include "motionqa/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "motionqa/error.hpp"

namespace motionqa {

Stars stars_for(double p) {
  if (p < 0.001) return Stars::Three;
  if (p < 0.01) return Stars::Two;
  if (p < 0.05) return Stars::One;
  return Stars::NS;
}

std::string to_string(Stars s) {
  switch (s) {
    case Stars::NS: return "ns";
    case Stars::One: return "*";
    case Stars::Two: return "**";
    case Stars::Three: return "***";
  }
  return "ns";
}

std::string to_string(TestKind k) { return k == TestKind::PairedT ? "t_paired" : "wilcoxon"; }

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

bool all_equal(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double skew_z(double g1, double n) {
  double y = g1 * std::sqrt((n + 1) * (n + 3) / (6.0 * (n - 2)));
  const double beta2 = 3.0 * (n * n + 27 * n - 70) * (n + 1) * (n + 3) /
                       ((n - 2) * (n + 5) * (n + 7) * (n + 9));
  const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
  const double alpha = std::sqrt(2.0 / (w2 - 1.0));
  if (y == 0.0) y = 1.0;
  const double r = y / alpha;
  return delta * std::log(r + std::sqrt(r * r + 1.0));
}

double kurtosis_z(double b2, double n) {
  const double e = 3.0 * (n - 1) / (n + 1);
  const double var_b2 = 24.0 * n * (n - 2) * (n - 3) / ((n + 1) * (n + 1) * (n + 3) * (n + 5));
  const double x = (b2 - e) / std::sqrt(var_b2);
  const double sqrt_beta1 = 6.0 * (n * n - 5 * n + 2) / ((n + 7) * (n + 9)) *
                            std::sqrt(6.0 * (n + 3) * (n + 5) / (n * (n - 2) * (n - 3)));
  const double a =
      6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
  const double term1 = 1.0 - 2.0 / (9.0 * a);
  const double denom = 1.0 + x * std::sqrt(2.0 / (a - 4.0));
  const double term2 = std::copysign(std::cbrt((1.0 - 2.0 / a) / std::abs(denom)), denom);
  return (term1 - term2) / std::sqrt(2.0 / (9.0 * a));
}

struct SignedRanks {
  std::vector<double> ranks;  // mid-ranks of |d|
  std::vector<bool> positive;
  std::vector<std::size_t> tie_sizes;
};

SignedRanks rank_nonzero(std::span<const double> diffs) {
  std::vector<double> d;
  for (double x : diffs)
    if (x != 0.0) d.push_back(x);
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });
  SignedRanks out{std::vector<double>(d.size()), std::vector<bool>(d.size()), {}};
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) out.ranks[order[k]] = mid;
    out.tie_sizes.push_back(j - i + 1);
    i = j + 1;
  }
  for (std::size_t i = 0; i < d.size(); ++i) out.positive[i] = d[i] > 0.0;
  return out;
}

// Two-sided exact p: share of the 2^n sign assignments whose min(W+, W-) is
// at most the observed W. Mid-ranks are doubled to make the subset sums
// integral.
double wilcoxon_exact_p(const std::vector<double>& ranks, double w) {
  std::vector<long> doubled;
  long total = 0;
  for (double r : ranks) {
    doubled.push_back(std::lround(2.0 * r));
    total += doubled.back();
  }
  std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  long reach = 0;
  for (long r : doubled) {
    for (long s = reach; s >= 0; --s)
      if (counts[static_cast<std::size_t>(s)] != 0.0)
        counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
    reach += r;
  }
  const long w2 = std::lround(2.0 * w);
  double hits = 0.0;
  for (long s = 0; s <= total; ++s)
    if (std::min(s, total - s) <= w2) hits += counts[static_cast<std::size_t>(s)];
  return std::min(1.0, hits / std::ldexp(1.0, static_cast<int>(ranks.size())));
}

}  // namespace

NormalityResult normality_check(std::span<const double> values) {
  const std::size_t count = values.size();
  if (count < 8) fail(ErrorCode::TooFewSamples, "normality check needs n >= 8");
  const double n = static_cast<double>(count);
  const double m = mean_of(values);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : values) {
    const double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0) || all_equal(values)) fail(ErrorCode::ZeroVariance, "sample is constant");
  const double zs = skew_z(m3 / std::pow(m2, 1.5), n);
  const double zk = kurtosis_z(m4 / (m2 * m2), n);
  const double k2 = zs * zs + zk * zk;
  const double p = std::exp(-k2 / 2.0);  // chi-square(2) survival
  return {p >= 0.05, p, k2};
}

void PairedSample::validate() const {
  if (a.size() != b.size() || labels.size() != a.size())
    fail(ErrorCode::InvalidArgument, "paired sample columns differ in length");
  if (a.size() < 2) fail(ErrorCode::TooFewSamples, "paired sample needs n >= 2");
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) fail(ErrorCode::InvalidArgument, "paired sample ids repeat");
}

std::vector<double> PairedSample::differences() const {
  validate();
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

TestResult paired_t_test(std::span<const double> diffs) {
  if (diffs.size() < 2) fail(ErrorCode::TooFewSamples, "paired t-test needs n >= 2");
  if (all_equal(diffs)) fail(ErrorCode::ZeroVariance, "all paired differences are equal");
  const double n = static_cast<double>(diffs.size());
  const double sd = std::sqrt(sample_variance(diffs));
  const double t = mean_of(diffs) / (sd / std::sqrt(n));
  const boost::math::students_t dist(n - 1.0);
  const double p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  return {TestKind::PairedT, t, p, diffs.size(), stars_for(p)};
}

TestResult paired_t_test(const PairedSample& s) { return paired_t_test(s.differences()); }

TestResult wilcoxon_signed_rank(std::span<const double> diffs) {
  const SignedRanks sr = rank_nonzero(diffs);
  const std::size_t n = sr.ranks.size();
  if (n < 5)
    fail(ErrorCode::TooFewSamples,
         "Wilcoxon needs >= 5 non-zero differences, got " + std::to_string(n));
  double w_plus = 0.0, w_minus = 0.0;
  for (std::size_t i = 0; i < n; ++i) (sr.positive[i] ? w_plus : w_minus) += sr.ranks[i];
  const double w = std::min(w_plus, w_minus);
  double p;
  if (n <= kWilcoxonExactLimit) {
    p = wilcoxon_exact_p(sr.ranks, w);
  } else {
    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1) / 4.0;
    double tie_term = 0.0;
    for (auto t : sr.tie_sizes) {
      const double tt = static_cast<double>(t);
      tie_term += tt * tt * tt - tt;
    }
    const double sigma = std::sqrt(nn * (nn + 1) * (2 * nn + 1) / 24.0 - tie_term / 48.0);
    const double z = std::min(0.0, w - mu + 0.5) / sigma;
    p = std::min(1.0, normal_two_sided(z));
  }
  return {TestKind::Wilcoxon, w, p, n, stars_for(p)};
}

TestResult wilcoxon_signed_rank(const PairedSample& s) {
  return wilcoxon_signed_rank(s.differences());
}

std::vector<FdrEntry> fdr_bh(std::span<const double> p_values, double q) {
  const std::size_t m = p_values.size();
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::InvalidArgument, "p-values must lie in [0, 1]");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return p_values[i] < p_values[j]; });
  std::vector<FdrEntry> out(m);
  std::size_t cutoff = 0;  // number rejected
  for (std::size_t rank = 1; rank <= m; ++rank)
    if (p_values[order[rank - 1]] <= static_cast<double>(rank) * q / static_cast<double>(m))
      cutoff = rank;
  double running = 1.0;
  for (std::size_t rank = m; rank >= 1; --rank) {
    const std::size_t idx = order[rank - 1];
    running = std::min(running, static_cast<double>(m) * p_values[idx] / static_cast<double>(rank));
    out[idx] = {p_values[idx], std::min(running, 1.0), rank <= cutoff};
  }
  return out;
}

void RatingTable::validate() const {
  if (subjects() < 2 || raters() < 2)
    fail(ErrorCode::InvalidArgument, "rating table needs >= 2 subjects and >= 2 raters");
  for (const auto& row : scores) {
    if (row.size() != raters()) fail(ErrorCode::InvalidArgument, "rating table is ragged");
    for (int s : row)
      if (s < 1 || s > 5) fail(ErrorCode::InvalidArgument, "Likert scores must lie in 1..5");
  }
}

IccResult icc_absolute_agreement(const RatingTable& r) {
  r.validate();
  const std::size_t n = r.subjects(), k = r.raters();
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  double grand = 0.0;
  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double x = r.scores[i][j];
      grand += x;
      row_mean[i] += x / kd;
      col_mean[j] += x / nd;
    }
  grand /= nd * kd;
  double ss_rows = 0.0, ss_cols = 0.0, ss_total = 0.0;
  for (double m : row_mean) ss_rows += kd * (m - grand) * (m - grand);
  for (double m : col_mean) ss_cols += nd * (m - grand) * (m - grand);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) ss_total += (r.scores[i][j] - grand) * (r.scores[i][j] - grand);
  const double ss_err = std::max(ss_total - ss_rows - ss_cols, 0.0);

  IccResult out;
  out.ms_rows = ss_rows / (nd - 1);
  out.ms_cols = ss_cols / (kd - 1);
  out.ms_error = ss_err / ((nd - 1) * (kd - 1));
  constexpr double eps = 1e-12;
  if (out.ms_rows <= eps && out.ms_error <= eps)
    fail(ErrorCode::DegenerateTable, "no between-subject or residual variance in region '" +
                                         r.region + "'");
  const double msr = out.ms_rows, msc = out.ms_cols, mse = out.ms_error;
  out.icc = (msr - mse) / (msr + (kd - 1) * mse + kd * (msc - mse) / nd);

  if (mse <= eps && msc <= eps) {
    out.icc = 1.0;
    out.ci_lo = 1.0;
    out.ci_hi = 1.0;
    return out;
  }
  const double rho = out.icc;
  const double a = kd * rho / (nd * (1.0 - rho));
  const double b = 1.0 + kd * rho * (nd - 1) / (nd * (1.0 - rho));
  const double v = (a * msc + b * mse) * (a * msc + b * mse) /
                   ((a * msc) * (a * msc) / (kd - 1) + (b * mse) * (b * mse) / ((nd - 1) * (kd - 1)));
  const double fl = boost::math::quantile(boost::math::fisher_f(nd - 1, v), 0.975);
  const double fu = boost::math::quantile(boost::math::fisher_f(v, nd - 1), 0.975);
  out.ci_lo = nd * (msr - fl * mse) / (fl * (kd * msc + (kd * nd - kd - nd) * mse) + nd * msr);
  out.ci_hi = nd * (fu * msr - mse) / (kd * msc + (kd * nd - kd - nd) * mse + nd * fu * msr);
  return out;
}

double rescan_rate(std::span<const int> scores, int threshold) {
  if (scores.empty()) fail(ErrorCode::EmptyInput, "no scores to count");
  for (int s : scores)
    if (s < 1 || s > 5) fail(ErrorCode::InvalidArgument, "Likert scores must lie in 1..5");
  const auto below = std::count_if(scores.begin(), scores.end(), [&](int s) { return s < threshold; });
  return static_cast<double>(below) / static_cast<double>(scores.size());
}

double variance_ratio(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) return 0.0;
  const double vb = sample_variance(b);
  return vb > 0.0 ? sample_variance(a) / vb : 0.0;
}

std::string Comparison::stars_label() const {
  return degenerate ? "ns (degenerate)" : to_string(stars);
}

std::optional<double> metric_value(const MetricRow& row, const std::string& metric) {
  std::optional<double> v;
  if (metric == "psnr") {
    if (row.psnr) v = row.psnr->value();
  } else if (metric == "ssim") v = row.ssim;
  else if (metric == "snr") v = row.snr;
  else if (metric == "cnr") v = row.cnr;
  else if (metric == "fid") v = row.fid;
  else if (metric == "feature_dist") v = row.feature_dist;
  else fail(ErrorCode::InvalidArgument, "unknown metric '" + metric + "'");
  if (v && !std::isfinite(*v)) return std::nullopt;
  return v;
}

void adjust_family(std::vector<Comparison>& family, double q) {
  std::vector<double> p;
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < family.size(); ++i)
    if (!family[i].degenerate) {
      p.push_back(family[i].p_raw);
      members.push_back(i);
    }
  const auto adjusted = fdr_bh(p, q);
  for (std::size_t j = 0; j < members.size(); ++j) {
    auto& c = family[members[j]];
    c.p_adjusted = adjusted[j].p_adjusted;
    c.stars = stars_for(c.p_adjusted);
  }
}

namespace {

std::map<std::string, const MetricRow*> index_rows(const std::vector<MetricRow>& rows) {
  std::map<std::string, const MetricRow*> out;
  for (const auto& r : rows)
    if (!out.emplace(r.volume_id, &r).second)
      fail(ErrorCode::MismatchedCohorts, "volume id '" + r.volume_id + "' appears twice");
  return out;
}

Comparison run_comparison(const std::map<std::string, const MetricRow*>& base,
                          const std::vector<MetricRow>& method_rows, const std::string& metric) {
  const auto method = index_rows(method_rows);
  if (method.size() != base.size() ||
      !std::equal(method.begin(), method.end(), base.begin(),
                  [](const auto& x, const auto& y) { return x.first == y.first; }))
    fail(ErrorCode::MismatchedCohorts, "method and baseline cover different volumes");

  Comparison c;
  c.metric = metric;
  std::vector<double> diffs, va, vb;
  for (const auto& [id, row] : method) {
    const auto a = metric_value(*row, metric);
    const auto b = metric_value(*base.at(id), metric);
    if (!a || !b) continue;
    va.push_back(*a);
    vb.push_back(*b);
    diffs.push_back(*a - *b);
  }
  c.n = diffs.size();
  c.variance_ratio = variance_ratio(va, vb);
  try {
    bool use_t = false;
    if (diffs.size() >= 8) {
      try {
        use_t = normality_check(diffs).is_normal;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroVariance) throw;
      }
    }
    const TestResult r = use_t ? paired_t_test(diffs) : wilcoxon_signed_rank(diffs);
    c.test = r.test;
    c.statistic = r.statistic;
    c.p_raw = r.p_value;
    c.p_adjusted = r.p_value;
    c.stars = r.stars;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroVariance && e.code() != ErrorCode::TooFewSamples) throw;
    c.degenerate = true;
  }
  return c;
}

}  // namespace

std::vector<Comparison> compare_family(const std::string& dataset, const std::string& metric,
                                       const std::vector<MetricRow>& baseline,
                                       const std::vector<std::vector<MetricRow>>& methods) {
  const auto base = index_rows(baseline);
  const std::string base_label = baseline.empty() ? "" : baseline.front().method_label;
  std::vector<Comparison> family;
  for (const auto& rows : methods) {
    Comparison c = run_comparison(base, rows, metric);
    c.dataset = dataset;
    c.comparison = (rows.empty() ? std::string{} : rows.front().method_label) + " vs " + base_label;
    family.push_back(std::move(c));
  }
  adjust_family(family);
  return family;
}

Comparison compare_methods(const std::vector<MetricRow>& rows_a,
                           const std::vector<MetricRow>& rows_b, const std::string& metric) {
  return compare_family("", metric, rows_b, {rows_a}).front();
}

}  // namespace motionqa
