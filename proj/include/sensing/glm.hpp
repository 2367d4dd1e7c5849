#pragma once

#include <span>
#include <string>
#include <vector>

#include "sensing/ingestion.hpp"

namespace sensing::stats {

struct GlmObservation {
  FitnessGroup group = FitnessGroup::Fit;
  double st_ms = 0.0;
  double speed_kmh = 0.0;
  double igd_px = 0.0;
  double ttc_s = 0.0;
};

/// Model matrix for st ~ fitness + speed + IGD + TTC + fitness:IGD:TTC.
/// Fitness is treatment coded against the first level present; the
/// three-way term carries one IGD*TTC slope per level because its IGD:TTC
/// margin is not in the model.
struct GlmDesign {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;  // row-major rows x cols
  std::vector<double> y;
  std::vector<std::string> column_names;
  std::vector<std::string> term_names;  // "(Intercept)" first
  std::vector<std::size_t> column_term;  // term index of each column

  double at(std::size_t r, std::size_t c) const { return x[r * cols + c]; }
};

GlmDesign build_design(std::span<const GlmObservation> observations);

struct GlmTerm {
  std::string name;
  int df = 0;
  double ss = 0.0;
  double F = 0.0;
  double p = 1.0;
  bool significant = false;
};

struct GlmResult {
  std::vector<std::string> column_names;
  std::vector<double> coefficients;
  std::vector<GlmTerm> terms;  // sequential, intercept excluded
  std::vector<double> residuals;
  double rss = 0.0;
  int residual_df = 0;
  double alpha = 0.001;
};

/// Least squares by Householder QR on the design in listed column order;
/// each term's sum of squares is the squared norm of its slice of Q'y
/// (Type I). Throws RankDeficientDesign, DegenerateResponse, TooFewPoints.
GlmResult fit_glm(std::span<const GlmObservation> observations, double alpha = 0.001);

}  // namespace sensing::stats
