#pragma once

#include <cstdint>

namespace iondetect {

/// Regularized lower incomplete gamma function P(a, x) for integer a >= 1.
///
/// P(a, x) = 1/(a-1)! * integral_0^x exp(-y) y^(a-1) dy, so P(a, inf) = 1.
/// Uses the power series for x < a + 1 and a Lentz continued fraction for
/// the complement otherwise. Throws DomainError for a < 1 or x < 0 / non-finite.
double reg_inc_gamma(std::int64_t a, double x);

/// Complement Q(a, x) = 1 - P(a, x), accurate in the upper tail.
double reg_inc_gamma_upper(std::int64_t a, double x);

/// Poisson probability exp(-mean) mean^n / n!, evaluated in log space.
double poisson_pmf(std::int64_t n, double mean);

/// log of poisson_pmf; -inf where the pmf is exactly zero.
double log_poisson_pmf(std::int64_t n, double mean);

/// Truncation point ceil(mean + 12 sqrt(mean) + 30) used for all histograms.
std::int64_t histogram_nmax(double mean);

}  // namespace iondetect
