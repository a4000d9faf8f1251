#pragma once

// Estimators and goodness-of-fit statistics used by the experiments.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mobnet {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> x);

// sup_x |F_n(x) - F(x)| for a continuous reference CDF.
double ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);

// sup_x |F_n(x) - G_m(x)|, ties handled.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// Asymptotic Kolmogorov tail P(sqrt(n_eff) D > observed), with the usual
// small-sample correction (sqrt(n) + 0.12 + 0.11/sqrt(n)).
double kolmogorov_pvalue(double d, double n_eff);
double ks_pvalue_one_sample(double d, std::size_t n);
double ks_pvalue_two_sample(double d, std::size_t n, std::size_t m);

struct Interval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.96);

// sqrt(p (1-p) / n), with p = successes / trials.
double binomial_se(std::uint64_t successes, std::uint64_t trials);

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
};

// Weighted least squares y ~ a + b x with weights w (inverse variances).
LinearFit weighted_linear_fit(std::span<const double> x, std::span<const double> y,
                              std::span<const double> w);

// Linear-interpolation quantile of an unsorted sample (type 7).
double quantile(std::vector<double> x, double p);

// Distribution-free interval for the median from binomial order statistics.
Interval median_interval(std::vector<double> x, double z = 1.96);

}  // namespace mobnet
