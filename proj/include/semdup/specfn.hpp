#pragma once

// Special functions used by the closed-form null models.
// Every function is pure and throws DomainError outside its domain.

namespace semdup::specfn {

// ln Γ(x) for x > 0.
double ln_gamma(double x);

// Complete beta function B(a, b) = Γ(a)Γ(b)/Γ(a+b).
double beta_fn(double a, double b);
double ln_beta(double a, double b);

// Regularized incomplete beta I_x(a, b), evaluated by a modified Lentz
// continued fraction. Uses the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) when
// x > (a+1)/(a+b+2).
double reg_inc_beta(double x, double a, double b);

// Same, but takes the complement 1-x explicitly so callers can pass it
// without cancellation (e.g. 1-T^2 computed as (1-T)(1+T)).
double reg_inc_beta(double x, double one_minus_x, double a, double b);

// ln I_nu(kappa), modified Bessel function of the first kind, nu >= 0, kappa >= 0.
// Ascending series for small arguments, Debye uniform asymptotic expansion
// otherwise. Returns -inf for kappa == 0 and nu > 0.
double log_bessel_i(double nu, double kappa);

// ln Z_d(kappa) where Z_d(kappa) = E_{u ~ Unif(S^d)} exp(kappa <u, mu>)
//                              = 2^nu Γ(nu+1) kappa^{-nu} I_nu(kappa),  nu = (d-1)/2.
double log_vmf_normalizer(int d, double kappa);

// Z_d(kappa). Overflows to +inf for very large kappa; use the log form there.
double vmf_normalizer(int d, double kappa);

// Mean resultant length of vMF on S^d: I_{nu+1}(kappa) / I_nu(kappa).
double bessel_ratio(double nu, double kappa);

}  // namespace semdup::specfn
