#pragma once

#include <span>
#include <string>
#include <vector>

namespace sensing::stats {

// One level of a one-way layout; callers pass levels in factor order.
struct Group {
  std::string name;
  std::vector<double> values;
};

struct WelchResult {
  double F = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double p = 1.0;
};

/// Welch's heteroscedastic one-way ANOVA. Each group needs n >= 2 and a
/// positive variance, otherwise DegenerateGroup.
WelchResult welch_anova(std::span<const Group> groups);

struct TukeyRow {
  std::string group_a;  // later level
  std::string group_b;  // earlier (reference) level
  double diff = 0.0;    // mean_a - mean_b
  double lwr = 0.0;
  double upr = 0.0;
  double p_adj = 1.0;
};

struct TukeyResult {
  double mse = 0.0;
  double df = 0.0;
  double q_crit = 0.0;
  double conf = 0.95;
  std::vector<TukeyRow> rows;
};

/// Tukey-Kramer all-pairs comparison on the pooled one-way MSE. Rows come
/// in level order (1-0, 2-0, ..., 2-1, ...), each as later minus earlier.
TukeyResult tukey_hsd(std::span<const Group> groups, double conf = 0.95);

struct PearsonResult {
  double r = 0.0;
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

// Two-sided test of zero correlation. Throws ZeroVariance, TooFewPoints.
PearsonResult pearson_r(std::span<const double> x, std::span<const double> y);

struct ShapiroResult {
  double W = 1.0;
  double p = 1.0;
  std::size_t n = 0;
};

/// Shapiro-Wilk W with Royston's (1995) coefficient and p-value
/// approximations; valid for 3 <= n <= 5000.
ShapiroResult shapiro_wilk(std::span<const double> values);

}  // namespace sensing::stats
