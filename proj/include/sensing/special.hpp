#pragma once

namespace sensing::special {

/// Regularized incomplete beta I_x(a, b), evaluated by the continued
/// fraction with modified Lentz iteration (relative error ~1e-13).
/// Throws NonConvergence if the fraction fails to settle.
double inc_beta(double x, double a, double b);

// Lower and upper tails of Fisher's F(d1, d2).
double f_cdf(double x, double d1, double d2);
double f_sf(double x, double d1, double d2);

// Student t with `df` degrees of freedom.
double t_cdf(double x, double df);
// P(|T| >= |x|), computed without cancellation.
double t_two_sided(double x, double df);

double normal_pdf(double x);
double normal_cdf(double x);
double normal_sf(double x);

/// Standard normal quantile: rational starting point refined by one Halley
/// step against erfc, good to full double precision over (0, 1).
double normal_quantile(double p);

}  // namespace sensing::special
