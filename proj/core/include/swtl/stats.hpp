#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace swtl {

/// Thrown on precondition violations (bad arguments, empty inputs,
/// degenerate configurations).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

double expit(double x);  // linear predictor clipped to [-30, 30] before exp
double logit(double p);

double norm_pdf(double x);
double norm_cdf(double x);
/// Inverse standard-normal CDF, |error| < 1e-13 after Halley refinement.
double norm_quantile(double p);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

double t_cdf(double x, double df);
/// Upper-tail style quantile: returns x with P(T_df <= x) = p, accurate to ~1e-10.
double t_quantile(double p, double df);

double mean(std::span<const double> v);
/// Sample variance with n-1 divisor.
double sample_variance(std::span<const double> v);

/// Type-7 (linear interpolation) empirical quantile, q in [0,1].
double quantile_type7(std::vector<double> sorted_or_not, double q);

}  // namespace swtl
