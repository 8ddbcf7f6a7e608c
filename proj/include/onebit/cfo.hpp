#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "onebit/model.hpp"

namespace onebit {

/// Grid sizes and line-search controls for the two-step CFO search.
struct CfoSearchConfig {
  Index n1 = 300;  ///< coarse grid points over [0, 2pi)
  Index n2 = 10;   ///< refined grid: 2 n2 - 1 points spaced 2pi/(n1 n2) around the coarse peak
  int refine_max_iters = 100;
  double refine_grad_tol = 1e-10;  ///< stop when |dS/dw| / S falls below this
  double initial_step = 0.0;       ///< 0 selects 2pi / (10 n1 n2)
  double shrink = 0.5;
  double sufficient_increase = 1e-4;
  bool qpsk_fast_path = true;

  void validate() const;
  double first_step() const;
};

/// Prior and noise variances per real dimension, used by the linearized (general) objective.
struct ModelVariances {
  double sigma_h_sq = 0.5;
  double sigma_w_sq = 1.0;

  void validate() const;
};

struct DetectionResult {
  double omega_coarse = 0.0;
  double omega_refined = 0.0;
  double objective_coarse = 0.0;
  double objective_refined = 0.0;
};

struct CfoEstimate {
  double omega_coarse = 0.0;
  double omega_refined = 0.0;
  double omega_final = 0.0;
  double objective_at_coarse = 0.0;
  double objective_at_refined = 0.0;
  double objective_at_final = 0.0;
  int iterations_used = 0;
  bool converged = false;             ///< false when the iteration cap was hit
  std::vector<double> ascent_trace;   ///< S at the start point and after every accepted step
};

/// diag(C_z) of the linearized model, C_z = sigma_h^2 D D^T + sigma_w^2 I, from the column
/// norms of T alone (independent of the CFO candidate).
VectorXd bussgang_cz_diag(const TrainingBlock& training, const ModelVariances& vars, Index n_r);

/// G = sqrt(2/pi) diag(diag(C_z)^{-1/2}) D, dense.
MatrixXd bussgang_matrix(const TrainingBlock& training, double cfo_rad,
                         const ModelVariances& vars, Index n_r);

/// Matched-filter energy S(w) of a sign observation as a function of the CFO candidate.
///
/// Evaluated without forming D: D^T y is the realification of vec(Y B^H), so
/// S(w) = ||sum_i e^{-j i w} y_i t_i^H||_F^2 where y_i, t_i are the columns of Y and T. The
/// general (Bussgang) path rescales each column of Y by diag(C_z)^{-1/2} and multiplies by 2/pi.
class CfoObjective {
 public:
  /// `y` is the stacked real sign vector of length 2 n_r n_p. Passing `general` selects the
  /// linearized objective ||G^T y||^2; otherwise the QPSK form ||D^T y||^2 is used.
  CfoObjective(const VectorXd& y, const TrainingBlock& training,
               std::optional<ModelVariances> general = std::nullopt);

  double value(double omega) const;
  double gradient(double omega) const;
  std::pair<double, double> value_and_gradient(double omega) const;

  Index n_r() const { return y_.rows(); }
  Index n_p() const { return y_.cols(); }

 private:
  MatrixXcd y_;          // (weighted) observation, n_r x n_p
  MatrixXcd t_adj_;      // T^H, n_p x n_t
  double scale_ = 1.0;
};

double objective(const VectorXd& y, const TrainingBlock& training, double omega,
                 const ModelVariances& vars, bool qpsk_fast_path);

/// dS/dw of the QPSK objective ||D^T y||^2.
double objective_gradient(const VectorXd& y, const TrainingBlock& training, double omega);

std::vector<double> coarse_grid(Index n1);
std::vector<double> refined_grid(double center, Index n1, Index n2);

DetectionResult detect(const CfoObjective& obj, const CfoSearchConfig& config);

/// Gradient ascent with backtracking from `omega_start`. Only steps that pass the
/// sufficient-increase test are taken, so the objective trace is nondecreasing.
CfoEstimate refine(const CfoObjective& obj, double omega_start, const CfoSearchConfig& config);

/// Detection followed by refinement. `vars` is only consulted on the general path.
CfoEstimate estimate_cfo(const VectorXd& y, const TrainingBlock& training,
                         const CfoSearchConfig& config, const ModelVariances& vars = {});

}  // namespace onebit
