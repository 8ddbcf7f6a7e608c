#pragma once

// Standard normal density/CDF helpers that stay finite deep in the lower tail.

namespace onebit::normal {

double pdf(double x);
double cdf(double x);
double log_cdf(double x);

/// phi(x) / Phi(x). Uses a continued fraction for x < -8 where both factors underflow together.
double inverse_mills(double x);

}  // namespace onebit::normal
