#pragma once
// Scalar special functions backing the likelihood math and test statistics.

namespace morphoscale {

// log Gamma(x), x > 0.
double log_gamma(double x);

// Digamma psi(x) = d/dx log Gamma(x), x > 0. Uses the recurrence
// psi(x) = psi(x+1) - 1/x below x = 10, then the asymptotic series in
// 1/x^2 with Bernoulli-number coefficients. Absolute error < 1e-13 over
// the argument ranges used here.
double digamma(double x);

// Regularized lower/upper incomplete gamma P(a, x), Q(a, x) = 1 - P(a, x).
// Series expansion for x < a + 1, Lentz continued fraction otherwise.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Upper-tail probability of a chi-square variable with dof degrees of freedom.
double chi_square_sf(double x, double dof);

}  // namespace morphoscale
