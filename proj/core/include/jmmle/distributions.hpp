#pragma once

namespace jmmle {

/// Standard normal CDF.
double normal_cdf(double x);
/// 1 - Phi(x), evaluated without cancellation in the upper tail.
double normal_upper_tail(double x);
/// Phi^{-1}(prob) for prob in (0, 1).
double normal_quantile(double prob);
/// Upper-tail-accurate inverse: returns x with 1 - Phi(x) = tail.
double normal_upper_quantile(double tail);
/// Quantile of the chi-square distribution with `df` degrees of freedom.
double chi_squared_quantile(double df, double prob);
double chi_squared_cdf(double df, double x);

}  // namespace jmmle
