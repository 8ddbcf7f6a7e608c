#include "onebit/normal.hpp"

#include <cmath>
#include <numbers>

namespace onebit::normal {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
constexpr double kLogSqrt2Pi = 0.9189385332046727417803297;
constexpr double kTailSwitch = -8.0;

// Phi(x)/phi(x) for x < 0 via the Laplace continued fraction of the Mills ratio of t = -x:
// R(t) = 1/(t + 1/(t + 2/(t + 3/(t + ...)))). Backward evaluation; 80 levels is
// far past convergence for t >= 8.
double mills_ratio_tail(double x) {
  const double t = -x;
  double acc = t;
  for (int k = 80; k >= 1; --k) acc = t + k / acc;
  return 1.0 / acc;
}

}  // namespace

double pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double cdf(double x) { return 0.5 * std::erfc(-x * (0.5 * std::numbers::sqrt2)); }

double log_cdf(double x) {
  if (x >= kTailSwitch) return std::log(cdf(x));
  return -0.5 * x * x - kLogSqrt2Pi + std::log(mills_ratio_tail(x));
}

double inverse_mills(double x) {
  if (x >= kTailSwitch) return pdf(x) / cdf(x);
  return 1.0 / mills_ratio_tail(x);
}

}  // namespace onebit::normal
