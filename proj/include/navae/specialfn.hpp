#pragma once

// Standard normal primitives and the Student-t quantile used by the
// baseline intervals.

namespace navae {

/// Standard normal c.d.f. Phi(x). Throws DomainError for non-finite x.
double normal_cdf(double x);

/// Upper tail 1 - Phi(x), computed without cancellation.
double normal_sf(double x);

/// Standard normal density.
double normal_pdf(double x);

/// Quantile q(p) of N(0,1) for p in (0,1).
///
/// A Wichura AS241 rational approximation seeds Newton iterations on the
/// tail nearest to p, so |Phi(q(p)) - p| is at the level of the c.d.f.
/// rounding. For p > 1/2 the result is -q(1-p) with 1-p formed exactly,
/// which makes q antisymmetric bit-for-bit whenever 1-p is representable.
double normal_quantile(double p);

/// q(1 - t) evaluated from the upper-tail probability t in (0,1)
/// without forming 1 - t.
double normal_quantile_upper(double t);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Student-t c.d.f. with `dof` degrees of freedom.
double student_cdf(double t, double dof);

/// Student-t quantile. Inverts student_cdf through the incomplete beta
/// function by bracketed bisection.
double student_quantile(double p, double dof);

}  // namespace navae
