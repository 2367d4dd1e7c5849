#pragma once

#include <span>
#include <vector>

namespace sensing::stats {

/// Linear interpolation between order statistics at 1-based position
/// 1 + q(n-1) ("type 7"). Throws EmptyData.
double quantile(std::span<const double> data, double q);

struct Split {
  std::vector<double> kept;
  std::vector<double> removed;
  double threshold = 0.0;
};

/// Removes values strictly above Q3 + k * IQR; lower tail untouched.
/// Input order is preserved in both halves. Throws TooFewPoints below 4.
Split iqr_outlier_filter(std::span<const double> values, double k = 3.0);

// Values >= max_st_ms are misses; strictly smaller ones are kept.
Split miss_filter(std::span<const double> values, double max_st_ms = 500.0);

struct Summary {
  std::size_t n = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator; 0 for a single value
  double median = 0.0;
};

// Throws EmptyGroup for no data.
Summary summarize(std::span<const double> values);

struct BoxStats {
  double min = 0.0;  // lower whisker end
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;  // upper whisker end
  double iqr = 0.0;
  std::vector<double> outliers;
};

/// Quartiles of all values; whiskers span the points inside
/// [Q1 - k*IQR, Q3 + k*IQR], anything beyond is listed as an outlier.
BoxStats box_stats(std::span<const double> values, double k = 3.0);

}  // namespace sensing::stats
