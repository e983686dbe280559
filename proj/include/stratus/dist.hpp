#pragma once

// Special functions behind every p-value and critical value the engine reports.
// All functions are pure and thread-safe; invalid arguments raise
// Error(ErrorCode::DomainError).

namespace stratus::dist {

double normal_cdf(double x);
double normal_sf(double x);
// Inverse of normal_cdf on (0,1); Wichura's AS 241 (relative error ~1e-16).
double normal_quantile(double p);

// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
double incomplete_beta(double a, double b, double x);

// Upper tail P(F_{df1,df2} > f).
double f_sf(double f, double df1, double df2);

// Upper tail P(T_df > t).
double t_sf(double t, double df);

// Distribution of the range of k iid standard normals divided by an
// independent sqrt(chi^2_df / df). df may be non-integer; df = +inf is allowed.
double studentized_range_cdf(double q, int k, double df);
double studentized_range_sf(double q, int k, double df);

// Upper-alpha critical value: the q with studentized_range_sf(q, k, df) == alpha.
double studentized_range_quantile(double alpha, int k, double df);

}  // namespace stratus::dist
