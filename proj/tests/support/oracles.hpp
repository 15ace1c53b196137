#pragma once

// Reference computations written independently of the library, used to
// check it. They favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace motionqa::oracle {

// Unitary 2-D DFT by direct summation with the spectrum centred: output bin
// (u, v) holds frequency (u - ny/2, v - nx/2). Row-major ny x nx.
inline std::vector<std::complex<double>> centered_dft(const std::vector<std::complex<double>>& img,
                                                      std::size_t ny, std::size_t nx) {
  using C = std::complex<double>;
  std::vector<C> out(ny * nx);
  const double scale = 1.0 / std::sqrt(static_cast<double>(ny * nx));
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t u = 0; u < ny; ++u) {
    for (std::size_t v = 0; v < nx; ++v) {
      const double fu = static_cast<double>(u) - static_cast<double>(ny / 2);
      const double fv = static_cast<double>(v) - static_cast<double>(nx / 2);
      C acc = 0.0;
      for (std::size_t y = 0; y < ny; ++y) {
        for (std::size_t x = 0; x < nx; ++x) {
          const double ang = -two_pi * (fu * static_cast<double>(y) / ny + fv * static_cast<double>(x) / nx);
          acc += img[y * nx + x] * C(std::cos(ang), std::sin(ang));
        }
      }
      out[u * nx + v] = acc * scale;
    }
  }
  return out;
}

// Symmetric eigendecomposition by cyclic Jacobi rotations.
struct Eigen2 {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;  // columns
};

inline Eigen2 jacobi_eigen(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  Eigen2 out;
  for (std::size_t i = 0; i < n; ++i) out.values.push_back(a[i][i]);
  out.vectors = v;
  return out;
}

using Mat = std::vector<std::vector<double>>;

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Mat sqrtm_psd(const Mat& m) {
  const auto e = jacobi_eigen(m);
  const std::size_t n = m.size();
  Mat out(n, std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    const double s = std::sqrt(std::max(e.values[k], 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i][j] += s * e.vectors[i][k] * e.vectors[j][k];
  }
  return out;
}

// Frechet distance between Gaussian fits; rows of each set are samples.
inline double frechet(const Mat& a, const Mat& b) {
  const std::size_t d = a[0].size();
  auto moments = [d](const Mat& s, std::vector<double>& mu, Mat& cov) {
    mu.assign(d, 0.0);
    for (const auto& r : s)
      for (std::size_t j = 0; j < d; ++j) mu[j] += r[j] / s.size();
    cov.assign(d, std::vector<double>(d, 0.0));
    for (const auto& r : s)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) cov[i][j] += (r[i] - mu[i]) * (r[j] - mu[j]) / (s.size() - 1.0);
  };
  std::vector<double> ma, mb;
  Mat ca, cb;
  moments(a, ma, ca);
  moments(b, mb, cb);
  const Mat ra = sqrtm_psd(ca);
  Mat inner = matmul(matmul(ra, cb), ra);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) inner[i][j] = inner[j][i] = 0.5 * (inner[i][j] + inner[j][i]);
  const Mat root = sqrtm_psd(inner);
  double out = 0.0;
  for (std::size_t j = 0; j < d; ++j) out += (ma[j] - mb[j]) * (ma[j] - mb[j]);
  for (std::size_t j = 0; j < d; ++j) out += ca[j][j] + cb[j][j] - 2.0 * root[j][j];
  return out;
}

// Wilcoxon signed-rank by enumerating every sign pattern of the non-zero
// differences. Returns {W, two-sided p}.
inline std::pair<double, double> wilcoxon_enumerate(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double x : diffs)
    if (x != 0.0) d.push_back(x);
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) less += 1.0;
      else if (std::abs(d[j]) == std::abs(d[i])) equal += 1.0;
    }
    rank[i] = less + (equal + 1.0) / 2.0;
  }
  double wplus = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += rank[i];
    if (d[i] > 0) wplus += rank[i];
  }
  const double w = std::min(wplus, total - wplus);
  std::size_t extreme = 0;
  const std::size_t patterns = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) s += rank[i];
    if (std::min(s, total - s) <= w + 1e-9) ++extreme;
  }
  return {w, std::min(1.0, static_cast<double>(extreme) / static_cast<double>(patterns))};
}

// Benjamini-Hochberg from the definition: k = largest rank with
// p(k) <= k q / m; reject every p <= p(k). Adjusted p(i) = min over j >= i
// of m p(j) / j, capped at 1.
struct BhOut {
  std::vector<double> adjusted;
  std::vector<bool> rejected;
};

inline BhOut bh_bruteforce(const std::vector<double>& p, double q) {
  const std::size_t m = p.size();
  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  double cutoff = -1.0;
  for (std::size_t k = m; k >= 1; --k)
    if (sorted[k - 1] <= static_cast<double>(k) * q / static_cast<double>(m)) {
      cutoff = sorted[k - 1];
      break;
    }
  BhOut out;
  for (std::size_t i = 0; i < m; ++i) {
    out.rejected.push_back(p[i] <= cutoff);
    // Rank of p[i]: the largest sorted index holding this value gives the
    // smallest m p / j among ties.
    double best = 1.0;
    for (std::size_t j = 1; j <= m; ++j)
      if (sorted[j - 1] >= p[i]) best = std::min(best, static_cast<double>(m) * sorted[j - 1] / j);
    out.adjusted.push_back(best);
  }
  return out;
}

// Two-way ANOVA mean squares for a subjects x raters table.
struct Anova {
  double msr, msc, mse;
};

inline Anova anova_two_way(const std::vector<std::vector<int>>& t) {
  const double n = t.size(), k = t[0].size();
  double grand = 0.0;
  for (const auto& r : t)
    for (int v : r) grand += v;
  grand /= n * k;
  double ssr = 0.0, ssc = 0.0, sse = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double m = 0.0;
    for (int v : t[i]) m += v;
    m /= k;
    ssr += k * (m - grand) * (m - grand);
  }
  std::vector<double> cm(t[0].size(), 0.0);
  for (std::size_t j = 0; j < t[0].size(); ++j) {
    for (const auto& r : t) cm[j] += r[j];
    cm[j] /= n;
    ssc += n * (cm[j] - grand) * (cm[j] - grand);
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    double rm = 0.0;
    for (int v : t[i]) rm += v;
    rm /= k;
    for (std::size_t j = 0; j < t[0].size(); ++j) {
      const double e = t[i][j] - rm - cm[j] + grand;
      sse += e * e;
    }
  }
  return {ssr / (n - 1), ssc / (k - 1), sse / ((n - 1) * (k - 1))};
}

inline double icc_a1(const std::vector<std::vector<int>>& t) {
  const auto a = anova_two_way(t);
  const double n = t.size(), k = t[0].size();
  return (a.msr - a.mse) / (a.msr + (k - 1) * a.mse + k * (a.msc - a.mse) / n);
}

}  // namespace motionqa::oracle
