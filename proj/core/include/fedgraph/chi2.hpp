#pragma once

namespace fedgraph {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed
/// directly so small tails keep full relative precision.
double gamma_q(double a, double x);

/// P(chi^2_dof <= x).
double chi2_cdf(double dof, double x);
/// P(chi^2_dof > x).
double chi2_sf(double dof, double x);

/// Upper-tail quantile: the x with P(chi^2_dof > x) = q, for q in (0, 1).
/// Bracketed Newton iteration on the survival function, relative
/// tolerance 1e-12.
double chi2_quantile(double dof, double upper_tail);

}  // namespace fedgraph
