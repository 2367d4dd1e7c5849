#include "sensing/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sensing/error.hpp"
#include "sensing/special.hpp"
#include "sensing/studentized_range.hpp"

namespace sensing::stats {

namespace {

struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double var = 0.0;  // n - 1 denominator
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  m.n = static_cast<double>(v.size());
  for (double x : v) m.mean += x;
  m.mean /= m.n;
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var = v.size() > 1 ? m.var / (m.n - 1.0) : 0.0;
  return m;
}

// Horner evaluation with coefficients in increasing power order.
double poly(std::span<const double> c, double x) {
  double r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
  return r;
}

}  // namespace

WelchResult welch_anova(std::span<const Group> groups) {
  if (groups.size() < 2) throw Error(ErrorKind::DegenerateGroup, "Welch ANOVA needs k >= 2");
  const double k = static_cast<double>(groups.size());
  std::vector<Moments> m;
  for (const auto& g : groups) {
    if (g.values.size() < 2) {
      throw Error(ErrorKind::DegenerateGroup, "group '" + g.name + "' has fewer than 2 values");
    }
    m.push_back(moments(g.values));
    if (!(m.back().var > 0)) {
      throw Error(ErrorKind::DegenerateGroup, "group '" + g.name + "' has zero variance");
    }
  }

  double w_sum = 0.0;
  double weighted_mean = 0.0;
  for (const auto& g : m) {
    w_sum += g.n / g.var;
    weighted_mean += g.n / g.var * g.mean;
  }
  weighted_mean /= w_sum;

  double between = 0.0;
  double lambda = 0.0;
  for (const auto& g : m) {
    const double w = g.n / g.var;
    between += w * (g.mean - weighted_mean) * (g.mean - weighted_mean);
    lambda += (1.0 - w / w_sum) * (1.0 - w / w_sum) / (g.n - 1.0);
  }
  lambda /= k * k - 1.0;

  WelchResult r;
  r.df1 = k - 1.0;
  r.df2 = 1.0 / (3.0 * lambda);
  r.F = between / ((k - 1.0) * (1.0 + 2.0 * (k - 2.0) * lambda));
  r.p = special::f_sf(r.F, r.df1, r.df2);
  return r;
}

TukeyResult tukey_hsd(std::span<const Group> groups, double conf) {
  if (groups.size() < 2) throw Error(ErrorKind::DegenerateGroup, "Tukey HSD needs k >= 2");
  if (!(conf > 0 && conf < 1)) throw Error(ErrorKind::DomainError, "confidence level");
  std::vector<Moments> m;
  double ss_within = 0.0;
  double n_total = 0.0;
  for (const auto& g : groups) {
    if (g.values.empty()) throw Error(ErrorKind::DegenerateGroup, "group '" + g.name + "' empty");
    m.push_back(moments(g.values));
    ss_within += m.back().var * (m.back().n - 1.0);
    n_total += m.back().n;
  }
  const int k = static_cast<int>(groups.size());
  TukeyResult out;
  out.conf = conf;
  out.df = n_total - k;
  if (out.df < 1) throw Error(ErrorKind::DegenerateGroup, "no residual degrees of freedom");
  out.mse = ss_within / out.df;
  if (!(out.mse > 0)) throw Error(ErrorKind::DegenerateGroup, "zero within-group variance");
  out.q_crit = special::studentized_range_quantile(conf, k, out.df);

  for (int b = 0; b < k; ++b) {
    for (int a = b + 1; a < k; ++a) {
      TukeyRow row;
      row.group_a = groups[a].name;
      row.group_b = groups[b].name;
      row.diff = m[a].mean - m[b].mean;
      const double se = std::sqrt(0.5 * out.mse * (1.0 / m[a].n + 1.0 / m[b].n));
      row.lwr = row.diff - out.q_crit * se;
      row.upr = row.diff + out.q_crit * se;
      row.p_adj = special::studentized_range_sf(std::fabs(row.diff) / se, k, out.df);
      out.rows.push_back(row);
    }
  }
  return out;
}

PearsonResult pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DomainError, "x and y differ in length");
  if (x.size() < 3) throw Error(ErrorKind::TooFewPoints, "Pearson r needs n >= 3");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0) || !(syy > 0)) throw Error(ErrorKind::ZeroVariance, "constant input");

  PearsonResult r;
  r.n = x.size();
  r.df = n - 2.0;
  r.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (std::fabs(r.r) >= 1.0) {
    r.t = std::copysign(std::numeric_limits<double>::infinity(), r.r);
    r.p = 0.0;
  } else {
    r.t = r.r * std::sqrt(r.df / (1.0 - r.r * r.r));
    r.p = special::t_two_sided(r.t, r.df);
  }
  return r;
}

ShapiroResult shapiro_wilk(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 3 || n > 5000) {
    throw Error(ErrorKind::SampleSizeOutOfRange, "Shapiro-Wilk needs 3 <= n <= 5000");
  }
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (range < 1e-19 * std::max(1.0, std::fabs(x.back()))) {
    throw Error(ErrorKind::ZeroVariance, "Shapiro-Wilk on constant data");
  }

  static constexpr double g[] = {-2.273, 0.459};
  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};

  const double an = static_cast<double>(n);
  const std::size_t half = n / 2;
  // a[i] is the weight of the i-th largest minus i-th smallest order statistic.
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::numbers::sqrt2 / 2.0;
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = special::normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, rsn) - m[0] / ssumm2;
    std::size_t first_scaled;
    double fac;
    if (n > 5) {
      first_scaled = 2;
      const double a2 = -m[1] / ssumm2 + poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      first_scaled = 1;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first_scaled; i < half; ++i) a[i] = -m[i] / fac;
  }

  // W as the squared correlation of the data with the antisymmetric weights.
  std::vector<double> coef(n, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    coef[i] = -a[i];
    coef[n - 1 - i] = a[i];
  }
  double mean_coef = 0.0, mean_x = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_coef += coef[i];
    mean_x += x[i] / range;
  }
  mean_coef /= an;
  mean_x /= an;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = coef[i] - mean_coef;
    const double dx = x[i] / range - mean_x;
    ssa += da * da;
    ssx += dx * dx;
    sax += da * dx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);

  ShapiroResult r;
  r.n = n;
  r.W = 1.0 - w1;
  if (n == 3) {
    constexpr double six_over_pi = 6.0 / std::numbers::pi;
    constexpr double pi_over_three = std::numbers::pi / 3.0;
    r.p = std::max(0.0, six_over_pi * (std::asin(std::sqrt(r.W)) - pi_over_three));
    return r;
  }
  double y = std::log(w1);
  double mu, sigma;
  if (n <= 11) {
    const double gamma = poly(g, an);
    if (y >= gamma) {
      r.p = 1e-99;
      return r;
    }
    y = -std::log(gamma - y);
    mu = poly(c3, an);
    sigma = std::exp(poly(c4, an));
  } else {
    const double ln_n = std::log(an);
    mu = poly(c5, ln_n);
    sigma = std::exp(poly(c6, ln_n));
  }
  r.p = special::normal_sf((y - mu) / sigma);
  return r;
}

}  // namespace sensing::stats
