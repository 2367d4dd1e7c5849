#include "sensing/glm.hpp"

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "sensing/error.hpp"
#include "sensing/special.hpp"

namespace sensing::stats {

GlmDesign build_design(std::span<const GlmObservation> obs) {
  std::array<bool, kGroupCount> present{};
  for (const auto& o : obs) present[static_cast<int>(o.group)] = true;
  std::vector<FitnessGroup> levels;
  for (int g = 0; g < kGroupCount; ++g) {
    if (present[g]) levels.push_back(static_cast<FitnessGroup>(g));
  }

  GlmDesign d;
  d.term_names = {"(Intercept)", "fitness", "speed", "IGD", "TTC", "fitness:IGD:TTC"};
  const auto add = [&](std::string name, std::size_t term) {
    d.column_names.push_back(std::move(name));
    d.column_term.push_back(term);
  };
  add("(Intercept)", 0);
  for (std::size_t i = 1; i < levels.size(); ++i) {
    add("fitness" + std::string(to_string(levels[i])), 1);
  }
  add("speed", 2);
  add("IGD", 3);
  add("TTC", 4);
  for (auto level : levels) add("fitness" + std::string(to_string(level)) + ":IGD:TTC", 5);

  d.rows = obs.size();
  d.cols = d.column_names.size();
  d.x.reserve(d.rows * d.cols);
  for (const auto& o : obs) {
    d.x.push_back(1.0);
    for (std::size_t i = 1; i < levels.size(); ++i) d.x.push_back(o.group == levels[i] ? 1.0 : 0.0);
    d.x.push_back(o.speed_kmh);
    d.x.push_back(o.igd_px);
    d.x.push_back(o.ttc_s);
    for (auto level : levels) d.x.push_back(o.group == level ? o.igd_px * o.ttc_s : 0.0);
    d.y.push_back(o.st_ms);
  }
  return d;
}

GlmResult fit_glm(std::span<const GlmObservation> observations, double alpha) {
  for (const auto& o : observations) {
    if (!std::isfinite(o.st_ms) || !std::isfinite(o.speed_kmh) || !std::isfinite(o.igd_px) ||
        !std::isfinite(o.ttc_s)) {
      throw Error(ErrorKind::MissingCovariate, "non-finite value in GLM input");
    }
  }
  const GlmDesign design = build_design(observations);
  const auto n = static_cast<Eigen::Index>(design.rows);
  const auto p = static_cast<Eigen::Index>(design.cols);
  if (n <= p) {
    throw Error(ErrorKind::TooFewPoints, "GLM needs more observations than columns");
  }

  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < p; ++c) x(r, c) = design.at(r, c);
    y(r) = design.y[r];
  }
  const double y_mean = y.mean();
  if ((y.array() - y_mean).matrix().squaredNorm() == 0.0) {
    throw Error(ErrorKind::DegenerateResponse, "constant response");
  }

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::MatrixXd& packed = qr.matrixQR();
  for (Eigen::Index c = 0; c < p; ++c) {
    if (std::fabs(packed(c, c)) <= 1e-10 * std::max(1.0, x.col(c).norm())) {
      throw Error(ErrorKind::RankDeficientDesign, "column '" + design.column_names[c] +
                                                      "' is aliased with earlier columns");
    }
  }
  const Eigen::VectorXd effects = qr.householderQ().transpose() * y;
  const Eigen::VectorXd beta =
      packed.topLeftCorner(p, p).triangularView<Eigen::Upper>().solve(effects.head(p));
  const Eigen::VectorXd residuals = y - x * beta;

  GlmResult out;
  out.alpha = alpha;
  out.column_names = design.column_names;
  out.coefficients.assign(beta.data(), beta.data() + p);
  out.residuals.assign(residuals.data(), residuals.data() + n);
  out.residual_df = static_cast<int>(n - p);
  out.rss = effects.tail(n - p).squaredNorm();
  if (!(out.rss > 0)) throw Error(ErrorKind::DegenerateResponse, "model fits exactly");
  const double mse = out.rss / out.residual_df;

  for (std::size_t t = 1; t < design.term_names.size(); ++t) {
    GlmTerm term;
    term.name = design.term_names[t];
    for (Eigen::Index c = 0; c < p; ++c) {
      if (design.column_term[c] != t) continue;
      ++term.df;
      term.ss += effects(c) * effects(c);
    }
    if (term.df == 0) continue;  // single-level fitness
    term.F = term.ss / term.df / mse;
    term.p = special::f_sf(term.F, term.df, out.residual_df);
    term.significant = term.p < alpha;
    out.terms.push_back(term);
  }
  return out;
}

}  // namespace sensing::stats
