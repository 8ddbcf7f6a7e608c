#pragma once

#include "onebit/model.hpp"

namespace onebit {

/// Blocks of the Fisher information for z = [omega, h^T]^T under y = sgn(D(omega) h + w).
struct FisherPieces {
  double j_ww = 0.0;
  Eigen::RowVectorXd j_wh;
  MatrixXd j_hh;
  VectorXd lambda_diag;  ///< per-measurement weights phi_i

  /// [j_ww, j_wh; j_wh^T, j_hh]
  MatrixXd full() const;
};

struct CfoBound {
  double value = 0.0;
  bool regularized = false;  ///< a ridge was added to J_hh before inversion
};

/// Fisher weight of one sign measurement whose noiseless value is `projection` = d_i^T h.
double phi_weight(double projection, double sigma_w_sq);

VectorXd phi_weights(const MatrixXd& d_matrix, const VectorXd& h, double sigma_w_sq);

/// Kron factor of dD/domega (D = K kron I_{n_r}), from the partials of F_R and F_I.
MatrixXd d_dot_kron_factor(const TrainingBlock& training, double cfo_rad);

/// dD/domega, dense, same shape as D.
MatrixXd d_dot(const TrainingBlock& training, double cfo_rad, Index n_r);

/// J = M^T Lambda M with M = [Ddot h, D], formed from explicit matrices.
FisherPieces fim_from_matrices(const MatrixXd& d_matrix, const MatrixXd& d_dot_matrix,
                               const VectorXd& h, double sigma_w_sq);

/// Same blocks as fim_from_matrices, assembled from the Kronecker structure of D.
FisherPieces fim(const TrainingBlock& training, double cfo_rad, const VectorXd& h,
                 double sigma_w_sq, Index n_r);

/// (J_ww - J_wh J_hh^{-1} J_hw)^{-1}. Throws DegenerateInformation when the Schur
/// complement is not positive.
CfoBound crb_cfo(const FisherPieces& pieces);

/// CRB without forming J_hh: under D = K kron I the h-block splits into one 2n_t x 2n_t
/// block per receive antenna, and the Schur complement is a sum over antennas.
CfoBound crb_cfo_structured(const TrainingBlock& training, double cfo_rad, const VectorXd& h,
                            double sigma_w_sq, Index n_r);

}  // namespace onebit
