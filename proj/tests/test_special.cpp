#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>
#include <random>

#include "sensing/special.hpp"
#include "sensing/studentized_range.hpp"
#include "support.hpp"

using namespace sensing;
using namespace sensing::special;
using testing::kind_of;

namespace {

bool rel_close(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::max(std::abs(want), 1e-300);
}

}  // namespace

TEST_CASE("incomplete beta trivial cases") {
  for (double x : {0.0, 0.1, 0.37, 0.5, 0.99, 1.0}) CHECK(inc_beta(x, 1, 1) == doctest::Approx(x));
  CHECK(inc_beta(1.0, 3.5, 0.2) == 1.0);
  CHECK(inc_beta(0.0, 3.5, 0.2) == 0.0);
  CHECK(kind_of([] { inc_beta(1.2, 1, 1); }) == ErrorKind::DomainError);
  CHECK(kind_of([] { inc_beta(0.5, 0, 1); }) == ErrorKind::DomainError);
}

TEST_CASE("incomplete beta against mpmath values") {
  // 40-digit mpmath betainc(..., regularized=True)
  CHECK(rel_close(inc_beta(0.3, 2, 3), 0.34829999999999998042, 1e-12));
  CHECK(rel_close(inc_beta(0.9, 0.5, 0.5), 0.79516723530086657191, 1e-12));
  CHECK(rel_close(inc_beta(0.01, 10, 2), 1.0900000000000002267e-19, 1e-12));
  CHECK(rel_close(inc_beta(0.7, 50, 40), 0.99795244881484629744, 1e-12));
  CHECK(rel_close(inc_beta(0.2, 0.001, 5), 0.99978344564642765807, 1e-12));
}

TEST_CASE("incomplete beta against Boost over a grid") {
  for (double a : {0.05, 0.5, 1.0, 2.5, 7.0, 30.0, 200.0}) {
    for (double b : {0.05, 0.5, 1.0, 3.0, 12.0, 90.0}) {
      for (double x : {1e-6, 0.01, 0.2, 0.5, 0.8, 0.999}) {
        const double want = boost::math::ibeta(a, b, x);
        if (want < 1e-280) continue;
        INFO("a=" << a << " b=" << b << " x=" << x);
        CHECK(rel_close(inc_beta(x, a, b), want, 1e-12));
      }
    }
  }
}

TEST_CASE("t and F tails") {
  CHECK(t_cdf(0.0, 3.0) == 0.5);
  CHECK(rel_close(t_cdf(2.0, 5.0), 0.9490302605850709, 1e-12));
  CHECK(rel_close(t_cdf(-1.3, 12.5), 0.10853100531714448, 1e-12));
  CHECK(rel_close(f_sf(3.7, 2.0, 20.5), 0.042465280025743214, 1e-12));
  CHECK(rel_close(f_cdf(0.8, 4.0, 9.0), 0.4453821277073786, 1e-12));
  CHECK(f_cdf(0.0, 2, 3) == 0.0);
  CHECK(f_sf(0.0, 2, 3) == 1.0);

  for (double df : {1.0, 2.5, 7.0, 40.0, 500.0}) {
    const boost::math::students_t t(df);
    for (double x : {-30.0, -2.2, -0.4, 0.0, 0.9, 3.3, 12.0}) {
      CHECK(rel_close(t_cdf(x, df), boost::math::cdf(t, x), 1e-12));
      CHECK(rel_close(t_two_sided(x, df), 2 * boost::math::cdf(t, -std::abs(x)), 1e-12));
    }
  }
  for (double d1 : {1.0, 2.0, 5.0}) {
    for (double d2 : {3.0, 17.5, 60.0}) {
      const boost::math::fisher_f f(d1, d2);
      for (double x : {0.05, 0.7, 2.0, 9.0, 80.0}) {
        CHECK(rel_close(f_cdf(x, d1, d2), boost::math::cdf(f, x), 1e-12));
        CHECK(rel_close(f_sf(x, d1, d2), boost::math::cdf(boost::math::complement(f, x)), 1e-12));
      }
    }
  }
}

TEST_CASE("normal functions") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327));
  CHECK(rel_close(normal_quantile(1e-10), -6.361340902404056, 1e-14));
  CHECK(rel_close(normal_quantile(0.01), -2.3263478740408408, 1e-14));
  CHECK(rel_close(normal_quantile(0.3), -0.5244005127080409, 1e-14));
  CHECK(rel_close(normal_quantile(0.975), 1.959963984540054, 1e-14));
  CHECK(rel_close(normal_quantile(1 - 1e-9), 5.997807019601637, 1e-9));
  const boost::math::normal n;
  for (double x : {-9.0, -3.0, -0.5, 0.2, 4.0}) {
    CHECK(rel_close(normal_cdf(x), boost::math::cdf(n, x), 1e-14));
    CHECK(rel_close(normal_sf(x), boost::math::cdf(boost::math::complement(n, x)), 1e-13));
  }
  CHECK(std::isinf(normal_quantile(0.0)));
  CHECK(kind_of([] { normal_quantile(1.5); }) == ErrorKind::DomainError);
}

TEST_CASE("studentized range against scipy") {
  struct Case {
    double q;
    int k;
    double df;
    double p;
  };
  // scipy.stats.studentized_range.cdf
  const Case cases[] = {
      {3.0, 3, 50, 0.9042742757197171}, {3.5, 3, 53, 0.9569475690815036},
      {1.0, 2, 5, 0.48891591956971947}, {4.2, 4, 10, 0.9423647762673615},
      {2.5, 3, 1000, 0.818965276592564}, {5.0, 5, 3, 0.8605658959134056},
      {0.5, 3, 20, 0.06635594379849288},
  };
  for (const auto& c : cases) {
    INFO("q=" << c.q << " k=" << c.k << " df=" << c.df);
    CHECK(std::abs(studentized_range_cdf(c.q, c.k, c.df) - c.p) < 1e-8);
    CHECK(std::abs(studentized_range_sf(c.q, c.k, c.df) - (1 - c.p)) < 1e-8);
  }
  CHECK(std::abs(studentized_range_quantile(0.95, 3, 53) - 3.4100427242639912) < 1e-7);
  CHECK(std::abs(studentized_range_quantile(0.95, 3, 50) - 3.4159205663964123) < 1e-7);
  CHECK(std::abs(studentized_range_quantile(0.99, 4, 12) - 5.501626301057456) < 1e-7);
}

TEST_CASE("studentized range limits and monotonicity") {
  CHECK(studentized_range_cdf(0.0, 3, 20) == 0.0);
  CHECK(std::abs(studentized_range_cdf(60.0, 3, 20) - 1.0) < 1e-8);
  CHECK(std::abs(studentized_range_cdf(1e6, 6, 4) - 1.0) < 1e-8);
  // k = 2 reduces to |t| * sqrt 2.
  for (double q : {0.3, 1.7, 4.0}) {
    CHECK(std::abs(studentized_range_cdf(q, 2, 9) - (1 - t_two_sided(q / std::sqrt(2.0), 9))) <
          1e-8);
  }
  for (int k : {2, 3, 6}) {
    for (double df : {1.0, 4.0, 56.0}) {
      double prev = 0.0;
      for (double q = 0.0; q <= 12.0; q += 0.25) {
        const double p = studentized_range_cdf(q, k, df);
        CHECK(p >= prev - 1e-12);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        prev = p;
      }
    }
  }
  CHECK(kind_of([] { studentized_range_cdf(1.0, 1, 10); }) == ErrorKind::DomainError);
  CHECK(kind_of([] { studentized_range_cdf(1.0, 3, 0.5); }) == ErrorKind::DomainError);
}

TEST_CASE("studentized range against Monte Carlo, k = 3, df = 50") {
  constexpr int kDraws = 1'000'000;
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> z;
  std::chi_squared_distribution<double> chi2(50.0);
  const double qs[] = {1.0, 2.0, 2.5, 3.0, 3.4159, 4.0};
  int below[6] = {};
  for (int i = 0; i < kDraws; ++i) {
    const double a = z(rng), b = z(rng), c = z(rng);
    const double range = std::max({a, b, c}) - std::min({a, b, c});
    const double q = range / std::sqrt(chi2(rng) / 50.0);
    for (int j = 0; j < 6; ++j) below[j] += q <= qs[j];
  }
  for (int j = 0; j < 6; ++j) {
    INFO("q=" << qs[j]);
    CHECK(std::abs(studentized_range_cdf(qs[j], 3, 50) - double(below[j]) / kDraws) < 1.5e-3);
  }
}
