#include "sensing/studentized_range.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "sensing/error.hpp"
#include "sensing/special.hpp"

namespace sensing::special {

namespace {

constexpr double kNodes[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                              0.8650633666889845, 0.9739065285171717};
constexpr double kWeights[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                                0.1494513491505806, 0.0666713443086881};

constexpr double kCdfTolerance = 1e-8;
constexpr int kMaxDepth = 30;

template <class F>
double gauss_legendre(const F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double dx = half * kNodes[i];
    sum += kWeights[i] * (f(mid - dx) + f(mid + dx));
  }
  return sum * half;
}

// Bisects panels until each one's 10-point estimate agrees with the sum of
// its halves to within its share of the tolerance.
template <class F>
class AdaptiveIntegral {
 public:
  explicit AdaptiveIntegral(const F& f) : f_(f) {}

  double operator()(double a, double b, int panels, double tol) {
    const double width = (b - a) / panels;
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
      const double lo = a + i * width;
      const double hi = i + 1 == panels ? b : lo + width;
      total += refine(lo, hi, gauss_legendre(f_, lo, hi), tol / panels, 0);
    }
    return total;
  }

  double unresolved_error() const { return unresolved_; }

 private:
  double refine(double a, double b, double whole, double tol, int depth) {
    const double mid = 0.5 * (a + b);
    const double left = gauss_legendre(f_, a, mid);
    const double right = gauss_legendre(f_, mid, b);
    const double err = std::fabs(left + right - whole);
    if (err <= tol) return left + right;
    if (depth >= kMaxDepth) {
      unresolved_ += err;
      return left + right;
    }
    return refine(a, mid, left, 0.5 * tol, depth + 1) +
           refine(mid, b, right, 0.5 * tol, depth + 1);
  }

  const F& f_;
  double unresolved_ = 0.0;
};

// Difference of normal CDFs taken in whichever tail avoids cancellation.
double normal_band(double lo, double hi) {
  if (lo >= 0) return normal_sf(lo) - normal_sf(hi);
  return normal_cdf(hi) - normal_cdf(lo);
}

// P(range of k iid standard normals <= w).
double range_probability(double w, int k, double tol, double& unresolved) {
  if (w <= 0) return 0.0;
  const auto integrand = [w, k](double z) {
    const double band = normal_band(z - w, z);
    if (band <= 0) return 0.0;
    return k * normal_pdf(z) * std::pow(band, k - 1);
  };
  AdaptiveIntegral<decltype(integrand)> integral(integrand);
  const double value = integral(-8.5, 8.5, 8, tol);
  unresolved += integral.unresolved_error();
  return std::min(1.0, std::max(0.0, value));
}

void check_args(int k, double df) {
  if (k < 2) throw Error(ErrorKind::DomainError, "studentized range needs k >= 2");
  if (!(df >= 1)) throw Error(ErrorKind::DomainError, "studentized range needs df >= 1");
}

}  // namespace

double studentized_range_cdf(double q, int k, double df) {
  check_args(k, df);
  if (std::isnan(q)) throw Error(ErrorKind::DomainError, "q is NaN");
  if (q <= 0) return 0.0;
  if (std::isinf(q)) return 1.0;

  double unresolved = 0.0;
  double result;
  if (std::isinf(df)) {
    result = range_probability(q, k, kCdfTolerance, unresolved);
  } else {
    // Density of s = sqrt(chi2_df / df), in logs for large df.
    const double log_norm = 0.5 * df * std::log(0.5 * df) + std::log(2.0) - std::lgamma(0.5 * df);
    const auto integrand = [&](double s) {
      if (s <= 0) return 0.0;
      const double log_density = log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
      const double density = std::exp(log_density);
      if (density < 1e-300) return 0.0;
      return density * range_probability(q * s, k, 0.1 * kCdfTolerance, unresolved);
    };
    const double mode = std::sqrt((df - 1.0) / df);
    const double spread = 14.0 / std::sqrt(2.0 * df);
    const double lo = std::max(0.0, mode - spread);
    const double hi = mode + spread;
    AdaptiveIntegral<decltype(integrand)> integral(integrand);
    result = integral(lo, hi, 8, 0.5 * kCdfTolerance);
    unresolved += integral.unresolved_error();
  }
  if (unresolved > kCdfTolerance) {
    throw Error(ErrorKind::NonConvergence,
                "studentized range cdf: achieved tolerance " + std::to_string(unresolved));
  }
  return std::min(1.0, std::max(0.0, result));
}

double studentized_range_sf(double q, int k, double df) {
  return 1.0 - studentized_range_cdf(q, k, df);
}

double studentized_range_quantile(double p, int k, double df) {
  check_args(k, df);
  if (!(p >= 0 && p < 1)) throw Error(ErrorKind::DomainError, "quantile needs p in [0, 1)");
  if (p == 0) return 0.0;

  // Each solve costs a dozen cdf evaluations and callers tend to ask for
  // the same few (p, k, df) over and over.
  static std::mutex mutex;
  static std::map<std::tuple<double, int, double>, double> cache;
  const auto key = std::make_tuple(p, k, df);
  {
    const std::lock_guard lock(mutex);
    if (const auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const auto f = [&](double q) { return studentized_range_cdf(q, k, df) - p; };
  double hi = 1.0;
  while (f(hi) < 0) {
    hi *= 2.0;
    if (hi > 1e6) throw Error(ErrorKind::NonConvergence, "studentized range quantile bracket");
  }
  const double lo = hi == 1.0 ? 0.0 : hi / 2.0;
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, [](double x, double y) { return std::fabs(x - y) <= 1e-10; }, max_iter);
  const double q = 0.5 * (a + b);
  const std::lock_guard lock(mutex);
  cache.emplace(key, q);
  return q;
}

}  // namespace sensing::special
