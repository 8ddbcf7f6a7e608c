#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include "onebit/types.hpp"

namespace testsupport {

using onebit::Index;
using onebit::MatrixXcd;
using onebit::MatrixXd;
using onebit::VectorXd;

inline double rel_err(double got, double want, double floor = 1e-300) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

template <class A, class B>
double rel_err_norm(const A& got, const B& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-300);
}

// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
  return sum * h / 3.0;
}

inline double gauss_density(double x, double mean, double var) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

inline double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Seeded generator for property tests.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  Index integer(Index lo, Index hi) {
    return std::uniform_int_distribution<Index>(lo, hi)(rng);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng); }
  MatrixXcd complex_matrix(Index rows, Index cols) {
    MatrixXcd m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) m(i, j) = {normal(), normal()};
    }
    return m;
  }
  MatrixXd real_matrix(Index rows, Index cols) {
    MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    }
    return m;
  }
  VectorXd real_vector(Index n) { return real_matrix(n, 1); }
  std::uint64_t seed() { return rng(); }
};

// Kronecker product written out entry by entry.
template <class M>
M kron(const M& a, const M& b) {
  M out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace testsupport
