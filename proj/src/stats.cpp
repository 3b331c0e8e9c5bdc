#include "cogfx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cogfx/error.hpp"

namespace cogfx {

namespace {

constexpr int kMaxIterations = 300;
constexpr double kTolerance = 1e-12;
constexpr double kTiny = 1e-300;
// Sums of squares below this fraction of the raw sum of squares are
// rounding residue, not spread.
constexpr double kRoundingFloor = 1e-24;

double raw_sum_squares(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x * x;
  return s;
}

double floor_residue(double ss, double raw) { return ss <= kRoundingFloor * raw ? 0.0 : ss; }

// Continued fraction for I_x(a,b), modified Lentz.
double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kTolerance) return h;
  }
  throw NumericError("incomplete beta: continued fraction did not converge");
}

TTestResult finish(double mean_a, double mean_b, double diff_se, double df, std::size_t na,
                   std::size_t nb) {
  TTestResult r{mean_a, mean_b, 0.0, df, 1.0, na, nb, false};
  if (diff_se == 0.0) {
    const double scale = std::max(std::fabs(mean_a), std::fabs(mean_b));
    if (std::fabs(mean_a - mean_b) > 1e-12 * scale) {
      r.t = mean_a > mean_b ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
      r.degenerate = true;
    }
    return r;
  }
  r.t = (mean_a - mean_b) / diff_se;
  r.p = t_two_tailed_p(r.t, df);
  return r;
}

void require_samples(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw NumericError("t-test needs at least two values per sample");
  }
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

TTestResult t_test_pooled(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double df = na + nb - 2.0;
  const double raw = raw_sum_squares(a) + raw_sum_squares(b);
  const double pooled = floor_residue((na - 1.0) * sample_variance(a) +
                                          (nb - 1.0) * sample_variance(b),
                                      raw) /
                        df;
  const double se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  return finish(mean(a), mean(b), se, df, a.size(), b.size());
}

TTestResult t_test_welch(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = floor_residue(sample_variance(a), raw_sum_squares(a)) / na;
  const double vb = floor_residue(sample_variance(b), raw_sum_squares(b)) / nb;
  const double se2 = va + vb;
  const double df =
      se2 == 0.0 ? na + nb - 2.0
                 : se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  return finish(mean(a), mean(b), std::sqrt(se2), df, a.size(), b.size());
}

AnovaResult one_way_anova(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw NumericError("ANOVA needs at least two groups");
  std::size_t n = 0;
  double total = 0.0;
  for (const auto& g : groups) {
    if (g.empty()) throw NumericError("ANOVA group is empty");
    n += g.size();
    total += std::accumulate(g.begin(), g.end(), 0.0);
  }
  if (n <= groups.size()) throw NumericError("ANOVA needs more observations than groups");
  const double grand = total / static_cast<double>(n);

  AnovaResult r;
  double raw = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g);
    r.ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double x : g) r.ss_within += (x - m) * (x - m);
    raw += raw_sum_squares(g);
  }
  r.ss_between = floor_residue(r.ss_between, raw);
  r.ss_within = floor_residue(r.ss_within, raw);
  r.df_between = static_cast<long>(groups.size()) - 1;
  r.df_within = static_cast<long>(n - groups.size());
  r.mse = r.ss_within / static_cast<double>(r.df_within);
  const double msb = r.ss_between / static_cast<double>(r.df_between);
  if (r.ss_within == 0.0) {
    if (r.ss_between == 0.0) return r;  // F = 0, p = 1
    r.F = std::numeric_limits<double>::infinity();
    r.p = 0.0;
    r.degenerate = true;
    return r;
  }
  r.F = msb / r.mse;
  r.p = f_sf(r.F, static_cast<double>(r.df_between), static_cast<double>(r.df_within));
  return r;
}

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw NumericError("incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw NumericError("incomplete beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(x, a, b) / a;
  }
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double t_two_tailed_p(double t, double df) {
  if (!(df > 0.0)) throw NumericError("t distribution: df must be positive");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5);
}

double t_cdf(double t, double df) {
  if (!(df > 0.0)) throw NumericError("t distribution: df must be positive");
  if (std::isnan(t)) throw NumericError("t distribution: NaN statistic");
  if (t == 0.0) return 0.5;
  const double tail = t_two_tailed_p(t, df) / 2.0;
  return t > 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw NumericError("t quantile: p outside (0, 1)");
  double lo = -1.0;
  double hi = 1.0;
  while (t_cdf(lo, df) > p) lo *= 2.0;
  while (t_cdf(hi, df) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, std::fabs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (t_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double f_cdf(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw NumericError("F distribution: dfs must be positive");
  if (!(f >= 0.0)) throw NumericError("F distribution: statistic must be >= 0");
  if (std::isinf(f)) return 1.0;
  return regularized_incomplete_beta(d1 * f / (d1 * f + d2), d1 / 2.0, d2 / 2.0);
}

double f_sf(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw NumericError("F distribution: dfs must be positive");
  if (!(f >= 0.0)) throw NumericError("F distribution: statistic must be >= 0");
  if (std::isinf(f)) return 0.0;
  return regularized_incomplete_beta(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0);
}

}  // namespace cogfx
