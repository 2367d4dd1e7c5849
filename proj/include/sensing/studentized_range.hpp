#pragma once

namespace sensing::special {

/// P(Q <= q) for the studentized range of `k` normal means with `df`
/// degrees of freedom for the variance estimate. Outer integral runs over
/// the density of s = sqrt(chi2_df / df), inner over the normal range
/// probability; both use adaptive 10-point Gauss-Legendre panels with an
/// absolute tolerance of 1e-8 on the result.
///
/// Throws NonConvergence (with the achieved error) if panel bisection runs
/// out of depth before meeting the tolerance.
double studentized_range_cdf(double q, int k, double df);

// Upper tail, 1 - cdf.
double studentized_range_sf(double q, int k, double df);

/// Inverse of studentized_range_cdf in q, solved to 1e-10 in q.
double studentized_range_quantile(double p, int k, double df);

}  // namespace sensing::special
