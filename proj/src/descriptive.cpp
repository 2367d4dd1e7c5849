#include "sensing/descriptive.hpp"

#include <algorithm>
#include <cmath>

#include "sensing/error.hpp"

namespace sensing::stats {

namespace {

double sorted_quantile(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

double quantile(std::span<const double> data, double q) {
  if (data.empty()) throw Error(ErrorKind::EmptyData, "quantile of no data");
  if (!(q >= 0 && q <= 1)) throw Error(ErrorKind::DomainError, "quantile level outside [0,1]");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted_quantile(sorted, q);
}

Split iqr_outlier_filter(std::span<const double> values, double k) {
  if (values.size() < 4) {
    throw Error(ErrorKind::TooFewPoints, "IQR rule needs at least 4 values");
  }
  const double q1 = quantile(values, 0.25);
  const double q3 = quantile(values, 0.75);
  Split out;
  out.threshold = q3 + k * (q3 - q1);
  for (double v : values) (v > out.threshold ? out.removed : out.kept).push_back(v);
  return out;
}

Split miss_filter(std::span<const double> values, double max_st_ms) {
  Split out;
  out.threshold = max_st_ms;
  for (double v : values) (v >= max_st_ms ? out.removed : out.kept).push_back(v);
  return out;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyGroup, "summary of no data");
  Summary s;
  s.n = values.size();
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  s.median = quantile(values, 0.5);
  return s;
}

BoxStats box_stats(std::span<const double> values, double k) {
  if (values.empty()) throw Error(ErrorKind::EmptyGroup, "box of no data");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  BoxStats b;
  b.q1 = sorted_quantile(sorted, 0.25);
  b.median = sorted_quantile(sorted, 0.5);
  b.q3 = sorted_quantile(sorted, 0.75);
  b.iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - k * b.iqr;
  const double hi_fence = b.q3 + k * b.iqr;
  b.min = b.q1;
  b.max = b.q3;
  for (double v : sorted) {
    if (v < lo_fence || v > hi_fence) {
      b.outliers.push_back(v);
    } else {
      b.min = std::min(b.min, v);
      b.max = std::max(b.max, v);
    }
  }
  return b;
}

}  // namespace sensing::stats
