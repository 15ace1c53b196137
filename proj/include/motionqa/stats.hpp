#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motionqa/metrics.hpp"

namespace motionqa {

enum class Stars { NS, One, Two, Three };

/// ns for p >= 0.05, then *, **, *** below 0.05, 0.01, 0.001. A p equal to
/// a threshold earns the weaker mark.
Stars stars_for(double p);
std::string to_string(Stars s);

struct NormalityResult {
  bool is_normal = false;
  double p = 0.0;
  double statistic = 0.0;  // K^2
};

/// D'Agostino-Pearson omnibus test. Throws TooFewSamples for n < 8 and
/// ZeroVariance for a constant sample.
NormalityResult normality_check(std::span<const double> values);

enum class TestKind { PairedT, Wilcoxon };
std::string to_string(TestKind k);

struct TestResult {
  TestKind test = TestKind::PairedT;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_effective = 0;
  Stars stars = Stars::NS;
};

struct PairedSample {
  std::vector<std::string> labels;
  std::vector<double> a;
  std::vector<double> b;

  /// Throws InvalidArgument on unequal lengths, n < 2 or duplicate ids.
  void validate() const;
  std::vector<double> differences() const;  // a - b
};

/// Two-sided Student t on the paired differences. Throws ZeroVariance when
/// every difference is the same.
TestResult paired_t_test(const PairedSample& s);
TestResult paired_t_test(std::span<const double> diffs);

/// Largest n for which the exact null distribution is used.
inline constexpr std::size_t kWilcoxonExactLimit = 12;

/// Zero differences are dropped, ties get mid-ranks, W = min(W+, W-).
/// Exact two-sided p for n_effective <= 12, otherwise the normal
/// approximation with tie and continuity corrections. Throws TooFewSamples
/// when fewer than 5 non-zero differences remain.
TestResult wilcoxon_signed_rank(const PairedSample& s);
TestResult wilcoxon_signed_rank(std::span<const double> diffs);

struct FdrEntry {
  double p = 0.0;
  double p_adjusted = 0.0;
  bool rejected = false;
};

/// Benjamini-Hochberg step-up, reported in input order.
std::vector<FdrEntry> fdr_bh(std::span<const double> p_values, double q = 0.05);

/// subjects x raters scores in 1..5.
struct RatingTable {
  std::string region;
  std::vector<std::vector<int>> scores;

  std::size_t subjects() const { return scores.size(); }
  std::size_t raters() const { return scores.empty() ? 0 : scores.front().size(); }
  void validate() const;
};

struct IccResult {
  double icc = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double ms_rows = 0.0;
  double ms_cols = 0.0;
  double ms_error = 0.0;
};

/// ICC(A,1) with the F-based 95% interval. Throws DegenerateTable when
/// between-subject and residual mean squares are both zero.
IccResult icc_absolute_agreement(const RatingTable& r);

/// Fraction of scores strictly below threshold. Throws EmptyInput.
double rescan_rate(std::span<const int> scores, int threshold = 3);

/// Variance ratio var(a) / var(b) (sample variances); reported, not gating.
double variance_ratio(std::span<const double> a, std::span<const double> b);

struct Comparison {
  std::string dataset;
  std::string metric;
  std::string comparison;  // "<method> vs <baseline>"
  std::optional<TestKind> test;
  double statistic = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  Stars stars = Stars::NS;
  bool degenerate = false;
  std::size_t n = 0;
  double variance_ratio = 0.0;

  std::string stars_label() const;
};

/// Value of a named metric column ("psnr", "ssim", "snr", "cnr", "fid",
/// "feature_dist"); nullopt when absent or non-finite.
std::optional<double> metric_value(const MetricRow& row, const std::string& metric);

/// Runs the family of tests for one metric: every method against the
/// baseline, normality-gated choice of test, BH over the family, stars from
/// the adjusted p. Degenerate comparisons are marked and kept out of the
/// family. Throws MismatchedCohorts when the volume ids differ.
std::vector<Comparison> compare_family(const std::string& dataset, const std::string& metric,
                                       const std::vector<MetricRow>& baseline,
                                       const std::vector<std::vector<MetricRow>>& methods);

/// Single comparison form (a family of one).
Comparison compare_methods(const std::vector<MetricRow>& rows_a,
                           const std::vector<MetricRow>& rows_b, const std::string& metric);

/// Applies BH to already-computed comparisons in place.
void adjust_family(std::vector<Comparison>& family, double q = 0.05);

}  // namespace motionqa
