#pragma once

#include <span>

namespace mospi::stats {

/// Regularized incomplete beta function I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double dof);

/// Inverse of student_t_cdf, found by bracketing and bisection on the
/// incomplete-beta tail; accurate to ~1e-12 relative.
double student_t_quantile(double p, double dof);

/// t with P(T > t) = alpha; stays accurate when 1 - alpha rounds to 1.
double student_t_upper_quantile(double alpha, double dof);

/// Pairwise summation; fixed reduction order for reproducible sums.
double pairwise_sum(std::span<const double> values);
double mean(std::span<const double> values);

/// Sample standard deviation with the n - 1 denominator.
double sample_stddev(std::span<const double> values);

}  // namespace mospi::stats
