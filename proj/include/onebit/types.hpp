#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace onebit {

using cdouble = std::complex<double>;
using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Shape or length that cannot describe a valid model.
class InvalidDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Out-of-domain scalar parameter (nonpositive variance, bad damping, ...).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The instance carries no signal (e.g. zero channel when calibrating SNR).
class DegenerateInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The Fisher information about the CFO vanishes after removing nuisance parameters.
class DegenerateInformation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Maps any angle to [0, 2*pi).
inline double wrap_angle(double rad) {
  double w = std::fmod(rad, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

/// Signed angular difference a - b folded into [-pi, pi).
inline double wrapped_difference(double a, double b) {
  double d = std::fmod(a - b + kPi, kTwoPi);
  if (d < 0.0) d += kTwoPi;
  return d - kPi;
}

}  // namespace onebit
