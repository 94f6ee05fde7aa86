#pragma once

#include <span>

namespace blockprior {

/// ln Γ(a) for a > 0.
///
/// Lanczos-type series with g = 5.2421875 and 14 coefficients (the
/// `gammln` table of Press et al., 3rd ed.); relative error below 1e-14
/// away from the roots at a = 1 and a = 2, which are returned exactly.
/// Arguments below 0.5 are shifted up once with Γ(a) = Γ(a + 1) / a.
double log_gamma(double a);

/// log(exp(a) + exp(b)) without overflow.
double log_add_exp(double a, double b);

/// log(exp(a) - exp(b)) for a >= b; -inf when a == b.
double log_diff_exp(double a, double b);

/// log(1 - exp(x)) for x <= 0 (Mächler's two-branch evaluation).
double log1m_exp(double x);

/// log Σ exp(v_i); -inf for an empty span.
double log_sum_exp(std::span<const double> values);

/// Regularized lower incomplete gamma P(a, x) = γ(a, x) / Γ(a).
///
/// Series for x < a + 1, Lentz continued fraction for the complement
/// otherwise.
double reg_inc_gamma_lower(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double reg_inc_gamma_upper(double a, double x);

/// log P(a, x), finite far into the lower tail.
double log_reg_inc_gamma_lower(double a, double x);

/// log Q(a, x), finite far into the upper tail (x up to ~1e300).
double log_reg_inc_gamma_upper(double a, double x);

/// x with P(a, x) = p, for 0 < p < 1.
double inv_reg_inc_gamma_lower(double a, double p);

/// x with Q(a, x) = exp(log_q). Accepts log_q far below the double range
/// of q itself.
double inv_reg_inc_gamma_upper_log(double a, double log_q);

/// Inverse incomplete gamma given both log p and log q = log(1 - p).
///
/// The caller supplies whichever it can compute accurately; the smaller
/// tail drives the Newton iteration. Bracketed Newton in log space with
/// bisection fallback; throws std::runtime_error after 200 iterations.
double inv_reg_inc_gamma(double a, double log_p, double log_q);

/// Standard normal CDF via erfc.
double normal_cdf(double z);

/// log Φ(z), using an asymptotic Mills-ratio series deep in the lower tail.
double log_normal_cdf(double z);

/// log φ(z) of the standard normal density.
double log_normal_pdf(double z);

}  // namespace blockprior
