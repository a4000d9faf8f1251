#include "mobnet/stats.hpp"

#include <algorithm>
#include <cmath>

#include "mobnet/error.hpp"

namespace mobnet {

MeanSe mean_se(std::span<const double> x) {
  MeanSe r;
  r.n = x.size();
  if (x.empty()) return r;
  double sum = 0.0;
  for (double v : x) sum += v;
  r.mean = sum / static_cast<double>(x.size());
  if (x.size() < 2) return r;
  double ss = 0.0;
  for (double v : x) ss += (v - r.mean) * (v - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  return r;
}

double ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw Error(ErrorCode::InvalidArgument, "empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sample.size()) {
    std::size_t j = i;
    while (j < sample.size() && sample[j] == sample[i]) ++j;
    const double f = cdf(sample[i]);
    d = std::max(d, std::max(f - static_cast<double>(i) / n, static_cast<double>(j) / n - f));
    i = j;
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double kolmogorov_pvalue(double d, double n_eff) {
  const double s = std::sqrt(n_eff);
  const double lambda = (s + 0.12 + 0.11 / s) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_pvalue_one_sample(double d, std::size_t n) {
  return kolmogorov_pvalue(d, static_cast<double>(n));
}

double ks_pvalue_two_sample(double d, std::size_t n, std::size_t m) {
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return kolmogorov_pvalue(d, nn * mm / (nn + mm));
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) throw Error(ErrorCode::InvalidArgument, "no trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double binomial_se(std::uint64_t successes, std::uint64_t trials) {
  if (trials == 0) throw Error(ErrorCode::InvalidArgument, "no trials");
  const double p = static_cast<double>(successes) / static_cast<double>(trials);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

LinearFit weighted_linear_fit(std::span<const double> x, std::span<const double> y,
                              std::span<const double> w) {
  if (x.size() != y.size() || x.size() != w.size()) {
    throw Error(ErrorCode::DimensionMismatch, "fit inputs differ in length");
  }
  if (x.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two points");
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::InvalidArgument, "degenerate design");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.slope_se = std::sqrt(1.0 / sxx);  // weights are inverse variances
  return f;
}

double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw Error(ErrorCode::InvalidArgument, "empty sample");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

Interval median_interval(std::vector<double> x, double z) {
  if (x.empty()) throw Error(ErrorCode::InvalidArgument, "empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  const double half = z * std::sqrt(n) / 2.0;
  const auto lo = static_cast<std::ptrdiff_t>(std::floor(n / 2.0 - half));
  const auto hi = static_cast<std::ptrdiff_t>(std::ceil(n / 2.0 + half));
  const auto last = static_cast<std::ptrdiff_t>(x.size()) - 1;
  Interval r;
  r.estimate = quantile(x, 0.5);
  r.lo = x[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(lo, 0, last))];
  r.hi = x[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(hi, 0, last))];
  return r;
}

}  // namespace mobnet
