#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cogfx {

double mean(std::span<const double> xs);
// Unbiased sample variance (n - 1 denominator); 0 for fewer than two values.
double sample_variance(std::span<const double> xs);

struct TTestResult {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double t = 0.0;
  double df = 0.0;  // n_a + n_b - 2 for the pooled test
  double p = 1.0;   // two-tailed
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  bool degenerate = false;  // zero variance with unequal means
};

// Student's two-sample t-test with pooled variance. Requires n >= 2 per side.
TTestResult t_test_pooled(std::span<const double> a, std::span<const double> b);
// Welch's unequal-variance test (Satterthwaite df).
TTestResult t_test_welch(std::span<const double> a, std::span<const double> b);

struct AnovaResult {
  double F = 0.0;
  long df_between = 0;
  long df_within = 0;
  double p = 1.0;
  double mse = 0.0;  // SSW / df_within
  double ss_between = 0.0;
  double ss_within = 0.0;
  bool degenerate = false;
};

AnovaResult one_way_anova(std::span<const std::vector<double>> groups);

// I_x(a, b) by Lentz's continued fraction with the usual symmetry switch.
// Throws NumericError on domain violations or non-convergence.
double regularized_incomplete_beta(double x, double a, double b);

double t_cdf(double t, double df);
// P(|T| >= |t|).
double t_two_tailed_p(double t, double df);
// Inverse of t_cdf, by bisection.
double t_quantile(double p, double df);

double f_cdf(double f, double d1, double d2);
// P(F >= f), computed directly rather than as 1 - cdf.
double f_sf(double f, double d1, double d2);

}  // namespace cogfx
