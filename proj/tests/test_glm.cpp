#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sensing/glm.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace sensing;
using namespace sensing::stats;
using testing::kind_of;
using oracle::Big;
using oracle::BigMatrix;
using oracle::design_row;
using oracle::normal_equations;
using oracle::rel_close;
using oracle::rss_of;

namespace {

std::vector<GlmObservation> fixture12() { return oracle::glm_fixture(); }

}  // namespace

TEST_CASE("design columns") {
  const auto obs = fixture12();
  const auto d = build_design(obs);
  CHECK(d.rows == 12);
  CHECK(d.cols == 9);
  CHECK(d.column_names[0] == "(Intercept)");
  CHECK(d.term_names ==
        std::vector<std::string>{"(Intercept)", "fitness", "speed", "IGD", "TTC", "fitness:IGD:TTC"});
  CHECK(d.column_term == std::vector<std::size_t>{0, 1, 1, 2, 3, 4, 5, 5, 5});
  for (std::size_t r = 0; r < d.rows; ++r) {
    const auto want = design_row(obs[r]);
    for (std::size_t c = 0; c < d.cols; ++c) CHECK(d.at(r, c) == want[c].convert_to<double>());
  }
}

TEST_CASE("coefficients and sequential SS match the normal-equations oracle") {
  const auto obs = fixture12();
  BigMatrix x;
  std::vector<Big> y;
  for (const auto& o : obs) {
    x.push_back(design_row(o));
    y.push_back(Big(o.st_ms));
  }
  const auto beta = normal_equations(x, y, 9);
  const auto fit = fit_glm(obs);
  REQUIRE(fit.coefficients.size() == 9);
  for (std::size_t c = 0; c < 9; ++c) {
    INFO("column " << fit.column_names[c]);
    CHECK(rel_close(fit.coefficients[c], beta[c].convert_to<double>(), 1e-9));
  }

  // nested models: intercept | +fitness | +speed | +IGD | +TTC | +three-way
  const std::size_t ends[] = {1, 3, 4, 5, 6, 9};
  std::vector<Big> rss;
  for (auto e : ends) rss.push_back(rss_of(x, y, e));
  REQUIRE(fit.terms.size() == 5);
  const int dfs[] = {2, 1, 1, 1, 3};
  for (std::size_t t = 0; t < 5; ++t) {
    INFO("term " << fit.terms[t].name);
    CHECK(fit.terms[t].df == dfs[t]);
    CHECK(rel_close(fit.terms[t].ss, (rss[t] - rss[t + 1]).convert_to<double>(), 1e-9));
  }
  CHECK(rel_close(fit.rss, rss.back().convert_to<double>(), 1e-9));
  CHECK(fit.residual_df == 3);
  const double mse = fit.rss / 3;
  CHECK(rel_close(fit.terms[0].F, fit.terms[0].ss / 2 / mse, 1e-12));
  CHECK(fit.alpha == 0.001);
}

TEST_CASE("residual orthogonality and SS decomposition") {
  const auto obs = fixture12();
  const auto fit = fit_glm(obs);
  const auto d = build_design(obs);
  for (std::size_t c = 0; c < d.cols; ++c) {
    double dot = 0, norm = 0;
    for (std::size_t r = 0; r < d.rows; ++r) {
      dot += d.at(r, c) * fit.residuals[r];
      norm += d.at(r, c) * d.at(r, c);
    }
    CHECK(std::abs(dot) <= 1e-9 * std::sqrt(norm) * std::sqrt(fit.rss));
  }
  double mean = 0;
  for (const auto& o : obs) mean += o.st_ms;
  mean /= obs.size();
  double total = 0;
  for (const auto& o : obs) total += (o.st_ms - mean) * (o.st_ms - mean);
  double sum = fit.rss;
  for (const auto& t : fit.terms) sum += t.ss;
  CHECK(rel_close(sum, total, 1e-9));
}

TEST_CASE("GLM error cases") {
  auto obs = fixture12();
  for (auto& o : obs) o.st_ms = 250;
  CHECK(kind_of([&] { fit_glm(obs); }) == ErrorKind::DegenerateResponse);

  obs = fixture12();
  obs[3].ttc_s = std::nan("");
  CHECK(kind_of([&] { fit_glm(obs); }) == ErrorKind::MissingCovariate);

  obs = fixture12();
  for (auto& o : obs) o.speed_kmh = 30;  // collinear with the intercept
  CHECK(kind_of([&] { fit_glm(obs); }) == ErrorKind::RankDeficientDesign);

  obs = fixture12();
  obs.resize(9);
  CHECK(kind_of([&] { fit_glm(obs); }) == ErrorKind::TooFewPoints);
}

TEST_CASE("a response built from the design is fit exactly up to noise") {
  auto obs = fixture12();
  const double truth[] = {150, -40, 20, 1.5, 0.2, 4.0, 0.01, -0.02, 0.03};
  const double noise[] = {1, -2, 0.5, 1.5, -1, 2, -0.5, 0.3, -1.2, 0.8, 1.1, -0.9};
  const auto d = build_design(obs);
  for (std::size_t r = 0; r < obs.size(); ++r) {
    double v = noise[r];
    for (std::size_t c = 0; c < 9; ++c) v += truth[c] * d.at(r, c);
    obs[r].st_ms = v;
  }
  const auto fit = fit_glm(obs);
  CHECK(fit.coefficients[1] == doctest::Approx(-40).epsilon(0.1));
  CHECK(fit.rss < 20);
}
