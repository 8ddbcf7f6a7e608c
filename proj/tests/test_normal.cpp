#include <cmath>

#include "doctest.h"
#include "onebit/normal.hpp"
#include "support.hpp"

using namespace onebit;
using testsupport::phi_cdf;
using testsupport::rel_err;

namespace {

// phi(x)/Phi(x) straight from erfc; accurate while Phi(x) stays normal
double direct_mills(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi) / phi_cdf(x);
}

}  // namespace

TEST_CASE("pdf and cdf at reference points") {
  CHECK(normal::pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * kPi)).epsilon(1e-15));
  CHECK(normal::cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal::cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-14));
  CHECK(normal::cdf(-1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-14));
  for (double x = -30.0; x <= 8.0; x += 0.37) {
    // erfc magnifies the rounding of its argument by about x^2
    CHECK(rel_err(normal::cdf(x), phi_cdf(x)) < 1e-15 * (4.0 + x * x));
    CHECK(normal::cdf(x) + normal::cdf(-x) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("log_cdf matches log of cdf and the far-tail expansion") {
  for (double x = -35.0; x <= 6.0; x += 0.41) {
    CHECK(rel_err(normal::log_cdf(x), std::log(phi_cdf(x)), 1e-18) < 1e-12);
  }
  for (double x : {-40.0, -100.0, -1e3}) {
    const double x2 = x * x;
    const double expected = -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * kPi) +
                            std::log1p(-1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2));
    CHECK(rel_err(normal::log_cdf(x), expected) < 1e-12);
  }
  CHECK(std::isfinite(normal::log_cdf(-1e6)));
}

TEST_CASE("inverse Mills ratio agrees with the direct ratio") {
  for (double x = -8.0; x <= 8.0; x += 0.05) {
    CHECK(rel_err(normal::inverse_mills(x), direct_mills(x)) < 1e-12);
  }
  // continued-fraction branch, still checkable directly while Phi(x) is a normal double
  for (double x = -37.0; x < -8.0; x += 0.13) {
    CHECK(rel_err(normal::inverse_mills(x), direct_mills(x)) < 1e-12);
  }
}

TEST_CASE("inverse Mills ratio is continuous at the branch point and asymptotic to -x") {
  const double below = normal::inverse_mills(std::nextafter(-8.0, -9.0));
  const double at = normal::inverse_mills(-8.0);
  CHECK(rel_err(below, at) < 1e-13);
  for (double x : {-1e3, -1e5, -1e8}) {
    const double x2 = x * x;
    CHECK(rel_err(normal::inverse_mills(x), -x * (1.0 + 1.0 / x2 - 2.0 / (x2 * x2))) < 1e-13);
  }
  CHECK(normal::inverse_mills(40.0) >= 0.0);
  CHECK(normal::inverse_mills(40.0) < 1e-300);
}

TEST_CASE("inverse Mills ratio is positive and decreasing") {
  double prev = normal::inverse_mills(-60.0);
  for (double x = -59.5; x <= 10.0; x += 0.5) {
    const double v = normal::inverse_mills(x);
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
  }
}
