#pragma once

// Special functions used by every closed form in the library: log-gamma,
// regularized incomplete gamma (both tails) and digamma. Self-contained,
// no external math dependency.

namespace relbudget::specfun {

/// Natural log of the complete gamma function, s > 0.
/// Lanczos rational approximation (g = 7, 9 terms) with reflection below 0.5.
double log_gamma(double s);

/// Regularized lower incomplete gamma P(s, z) = Gamma(s,1)-CDF at z.
/// s > 0, z >= 0. Series for z < s + 1, modified-Lentz continued fraction
/// otherwise, both evaluated through log_gamma.
double reg_lower_gamma(double s, double z);

/// Complement Q(s, z) = 1 - P(s, z), computed on the stable branch so large z
/// does not cancel.
double reg_upper_gamma(double s, double z);

/// Derivative of log_gamma, s > 0. Recurrence below 10, asymptotic series above.
double digamma(double s);

}  // namespace relbudget::specfun
