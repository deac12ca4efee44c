#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "cinf/error.hpp"

namespace cinf {

namespace detail {

// Lower regularized gamma P(s, x) by its power series (x < s + 1).
inline double gamma_p_series(double s, double x) {
  double term = 1.0 / s, sum = term;
  for (int n = 1; n < 1000; ++n) {
    term *= x / (s + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

// Upper regularized gamma Q(s, x) by Lentz's continued fraction (x >= s + 1).
inline double gamma_q_cf(double s, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - s, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + s * std::log(x) - std::lgamma(s)) * h;
}

// Continued fraction for the incomplete beta function.
inline double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  double c = 1.0, d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < 1000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h;
}

}  // namespace detail

/// Upper regularized incomplete gamma Q(s, x).
inline double gamma_q(double s, double x) {
  if (!(s > 0.0)) throw DataError("gamma_q: shape must be positive");
  if (x <= 0.0) return 1.0;
  if (x < s + 1.0) return 1.0 - detail::gamma_p_series(s, x);
  return detail::gamma_q_cf(s, x);
}

inline double gamma_p(double s, double x) { return 1.0 - gamma_q(s, x); }

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(lbt) * detail::beta_cf(a, b, x) / a;
  return 1.0 - std::exp(lbt) * detail::beta_cf(b, a, 1.0 - x) / b;
}

/// P(X > x) for X ~ chi-square(df).
inline double chi_square_sf(double x, double df) {
  if (!(df >= 1.0)) throw DataError("chi_square_sf: df must be >= 1");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * x);
}

/// Two-sided P(|T| > |t|) for Student t with df degrees of freedom.
inline double student_t_two_sided(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

struct TTest {
  double t = 0.0;
  double p_value = 1.0;
  double df = 0.0;
  double mean_difference = 0.0;
};

/// Paired t-test on xs - ys, two-sided.
inline TTest paired_t_test(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DataError("paired_t_test: length mismatch");
  const std::size_t n = xs.size();
  if (n < 2) throw DataError("paired_t_test: need at least 2 pairs");
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean += xs[k] - ys[k];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = xs[k] - ys[k] - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(n - 1);
  if (!(var > 0.0)) throw DataError("degenerate pairs");
  TTest r;
  r.df = static_cast<double>(n - 1);
  r.mean_difference = mean;
  r.t = mean / std::sqrt(var / static_cast<double>(n));
  r.p_value = student_t_two_sided(r.t, r.df);
  return r;
}

/// Kolmogorov limiting survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 lambda^2}.
inline double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against U(0, 1), with Stephens'
/// small-sample correction of the limiting distribution.
inline KsResult ks_uniform(std::span<const double> sample) {
  if (sample.empty()) throw DataError("ks_uniform: empty sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double f = std::clamp(x[k], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(k) + 1.0) / n - f, f - static_cast<double>(k) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)};
}

/// Mid-ranks (1-based), ties get their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t k = 0;
  while (k < idx.size()) {
    std::size_t e = k + 1;
    while (e < idx.size() && v[idx[e]] == v[idx[k]]) ++e;
    const double mid = 0.5 * static_cast<double>(k + e - 1) + 1.0;
    for (std::size_t q = k; q < e; ++q) r[idx[q]] = mid;
    k = e;
  }
  return r;
}

/// Pearson correlation; NaN when either side is constant.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("pearson: need two equal-length samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

/// Spearman rank correlation (Pearson on mid-ranks).
inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pearson(rx, ry);
}

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Fraction of p-values at or below alpha.
inline double rejection_rate(std::span<const double> p, double alpha) {
  if (p.empty()) return 0.0;
  std::size_t r = 0;
  for (double x : p)
    if (x <= alpha) ++r;
  return static_cast<double>(r) / static_cast<double>(p.size());
}

}  // namespace cinf
