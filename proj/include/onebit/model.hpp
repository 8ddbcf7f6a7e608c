#pragma once

#include <cstdint>

#include "onebit/types.hpp"

namespace onebit {

/// Antenna counts and training length of a narrowband MIMO link.
struct SystemDims {
  Index n_t = 0;  ///< transmit antennas
  Index n_r = 0;  ///< receive antennas
  Index n_p = 0;  ///< training symbols

  void validate() const;

  /// Rows of the real measurement matrix: 2 n_r n_p.
  Index real_rows() const { return 2 * n_r * n_p; }
  /// Columns of the real measurement matrix: 2 n_r n_t.
  Index real_cols() const { return 2 * n_r * n_t; }
};

/// Pilot matrix T (n_t x n_p); column i is the symbol vector sent at time i.
struct TrainingBlock {
  MatrixXcd entries;

  Index n_t() const { return entries.rows(); }
  Index n_p() const { return entries.cols(); }

  /// True when every entry is one of +-1 +-j.
  bool is_qpsk() const;

  /// iid QPSK block with entries uniform over {+-1 +-j}.
  static TrainingBlock qpsk(Index n_t, Index n_p, std::uint64_t seed);
};

/// Ground-truth generative state of one trial.
///
/// Noise convention: `noise_var_per_dim` is sigma_w^2, the variance of each of the real and
/// imaginary parts of a noise sample (so a complex sample has variance 2 sigma_w^2). Every
/// API in this library takes the per-real-dimension value.
struct ComplexModelInstance {
  SystemDims dims;
  TrainingBlock training;
  MatrixXcd channel;  ///< H, n_r x n_t
  double cfo_rad = 0.0;
  double noise_var_per_dim = 1.0;

  void validate() const;
};

/// y = sgn(D h + w) with w ~ N(0, noise_var I).
struct RealifiedModel {
  MatrixXd d_matrix;
  VectorXd y;
  double noise_var = 1.0;
};

/// [1, e^{j theta}, ..., e^{j (n-1) theta}]^T.
VectorXcd vandermonde(double theta, Index n);

/// Componentwise one-bit quantizer; a zero component maps to +1.
cdouble csgn(cdouble z);
MatrixXcd csgn(const MatrixXcd& z);

/// B = T diag(a_{n_p}(cfo)).
MatrixXcd apply_cfo(const TrainingBlock& training, double cfo_rad);

/// Y = csgn(H B + W), W iid with per-dimension variance sigma_w^2. Pure in (inst, seed).
MatrixXcd simulate_observation(const ComplexModelInstance& inst, std::uint64_t rng_seed);

/// Builds D from (T, cfo) and stacks y = [Re vec(Y); Im vec(Y)].
RealifiedModel realify(const ComplexModelInstance& inst, const MatrixXcd& observation);

/// D = [F_R, -F_I; F_I, F_R] with F = B^T kron I_{n_r}, materialized densely.
MatrixXd build_d_matrix(const TrainingBlock& training, double cfo_rad, Index n_r);

/// The 2n_p x 2n_t factor K of D = K kron I_{n_r}: K = [B_R^T, -B_I^T; B_I^T, B_R^T].
MatrixXd kron_factor(const MatrixXcd& b);

// Column-major vec and the [real; imag] stacking used throughout the real model.
VectorXcd vec(const MatrixXcd& m);
MatrixXcd unvec(const VectorXcd& v, Index rows, Index cols);
VectorXd stack_real(const VectorXcd& v);
VectorXcd unstack_complex(const VectorXd& v);

/// Real channel vector h = [Re vec(H); Im vec(H)].
inline VectorXd realify_matrix(const MatrixXcd& m) { return stack_real(vec(m)); }
/// Inverse of realify_matrix.
inline MatrixXcd unrealify_matrix(const VectorXd& v, Index rows, Index cols) {
  return unvec(unstack_complex(v), rows, cols);
}

}  // namespace onebit
