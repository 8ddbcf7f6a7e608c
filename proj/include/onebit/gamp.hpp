#pragma once

#include <iosfwd>
#include <vector>

#include "onebit/model.hpp"

namespace onebit {

/// Sum-product GAMP with scalar variances, damping, and an EM outer loop.
struct GampConfig {
  int max_iters = 50;            ///< GAMP iterations per EM pass
  double damping = 0.7;          ///< weight of the new iterate, in (0, 1]
  double tol = 1e-6;             ///< relative change of x_hat
  double variance_floor = 1e-12;
  bool em_enabled = true;
  int em_max_iters = 20;
  double em_tol = 1e-4;          ///< relative hyperparameter change
  double divergence_factor = 1e6;
  bool record_trace = false;

  void validate() const;
};

enum class PriorFamily { gaussian, bernoulli_gaussian };

/// Separable prior on every real component of x.
struct PriorHyperparams {
  PriorFamily family = PriorFamily::gaussian;
  double sigma_x_sq = 1.0;       // gaussian
  double sparsity = 0.1;         // bernoulli-gaussian: P(x_i != 0)
  double active_variance = 1.0;
  double active_mean = 0.0;

  static PriorHyperparams gaussian(double sigma_x_sq);
  static PriorHyperparams bernoulli_gaussian(double sparsity, double active_variance,
                                             double active_mean = 0.0);

  void validate() const;
  double mean() const;
  double variance() const;
};

struct ScalarMoments {
  double mean = 0.0;
  double var = 0.0;
};

struct SpikeSlabMoments {
  double mean = 0.0;
  double var = 0.0;
  double support_prob = 0.0;  ///< posterior P(x != 0)
  double slab_mean = 0.0;     ///< posterior mean given x != 0
  double slab_var = 0.0;
};

/// Posterior moments of z ~ N(p_hat, tau_p) given y = sgn(z + w), w ~ N(0, sigma_w_sq).
ScalarMoments output_denoiser_sign(double p_hat, double tau_p, double y, double sigma_w_sq);

/// Posterior moments of z ~ N(p_hat, tau_p) given y = z + w (unquantized channel).
ScalarMoments output_denoiser_awgn(double p_hat, double tau_p, double y, double sigma_w_sq);

/// x ~ N(0, sigma_x_sq) observed as r_hat = x + N(0, tau_r).
ScalarMoments input_denoiser_gaussian(double r_hat, double tau_r, double sigma_x_sq);

/// x ~ (1 - lambda) delta_0 + lambda N(active_mean, active_var) observed as r_hat = x + N(0, tau_r).
SpikeSlabMoments input_denoiser_bg(double r_hat, double tau_r, double lambda, double active_var,
                                   double active_mean = 0.0);

/// Real linear map used by GAMP.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual VectorXd apply(const VectorXd& x) const = 0;
  virtual VectorXd apply_transpose(const VectorXd& s) const = 0;
  virtual double frobenius_sq() const = 0;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(MatrixXd a);
  Index rows() const override { return a_.rows(); }
  Index cols() const override { return a_.cols(); }
  VectorXd apply(const VectorXd& x) const override { return a_ * x; }
  VectorXd apply_transpose(const VectorXd& s) const override { return a_.transpose() * s; }
  double frobenius_sq() const override { return frob_; }
  const MatrixXd& matrix() const { return a_; }

 private:
  MatrixXd a_;
  double frob_;
};

/// A = K kron I_{n_r}: the structure of D for a realified narrowband model.
class KronOperator final : public LinearOperator {
 public:
  KronOperator(MatrixXd k, Index n_r);
  Index rows() const override { return k_.rows() * n_r_; }
  Index cols() const override { return k_.cols() * n_r_; }
  VectorXd apply(const VectorXd& x) const override;
  VectorXd apply_transpose(const VectorXd& s) const override;
  double frobenius_sq() const override { return frob_; }

 private:
  MatrixXd k_;
  Index n_r_;
  double frob_;
};

/// Realified F_c = B_c^T kron U_{n_r}, acting on the stacked beamspace vector c.
class BeamspaceOperator final : public LinearOperator {
 public:
  BeamspaceOperator(MatrixXcd b_c, MatrixXcd u_r);
  Index rows() const override { return 2 * u_r_.rows() * b_c_.cols(); }
  Index cols() const override { return 2 * u_r_.cols() * b_c_.rows(); }
  VectorXd apply(const VectorXd& c) const override;
  VectorXd apply_transpose(const VectorXd& s) const override;
  double frobenius_sq() const override { return frob_; }

 private:
  MatrixXcd b_c_;
  MatrixXcd u_r_;
  double frob_;
};

enum class OutputModel { sign, awgn };

struct OutputChannel {
  OutputModel model = OutputModel::sign;
  VectorXd y;
  double noise_var = 1.0;
};

struct GampTraceRow {
  int em_pass = 0;
  int iteration = 0;
  double residual = 0.0;
  PriorHyperparams prior;
};

/// Message state carried between EM passes.
struct GampState {
  VectorXd x_hat;
  double tau_x = 0.0;
  VectorXd s_hat;
  double tau_s = 0.0;
};

struct ChannelEstimate {
  VectorXd x_hat;         ///< posterior mean
  VectorXd x_var;         ///< posterior variances
  VectorXd support_prob;  ///< bernoulli-gaussian only
  VectorXd slab_mean;     ///< bernoulli-gaussian only
  VectorXd slab_var;      ///< bernoulli-gaussian only
  PriorHyperparams learned_hyperparams;
  int iterations_used = 0;
  int em_passes = 0;
  bool converged = false;
  bool diverged = false;
  std::vector<GampTraceRow> trace;
};

/// One GAMP run at fixed hyperparameters. `state` (optional) warm-starts the run and
/// receives the final messages.
ChannelEstimate gamp_solve(const LinearOperator& a, const OutputChannel& out,
                           const PriorHyperparams& prior, const GampConfig& config,
                           GampState* state = nullptr);

/// Sign model on a dense matrix.
ChannelEstimate gamp_solve(const MatrixXd& a, const VectorXd& y, double sigma_w_sq,
                           const PriorHyperparams& prior, const GampConfig& config);

/// M-step for the prior family of `current`, from a completed GAMP pass. Results are clamped
/// to [1e-12, 1e12] (sparsity to [1e-12, 1]).
PriorHyperparams em_update(const ChannelEstimate& est, const PriorHyperparams& current);

/// Alternates GAMP passes and EM updates until the hyperparameters settle.
ChannelEstimate gamp_em(const LinearOperator& a, const OutputChannel& out,
                        PriorHyperparams init, const GampConfig& config);

enum class ChannelFamily { gaussian, mmwave };

struct ChannelSolution {
  ChannelEstimate estimate;
  MatrixXcd h_hat;  ///< n_r x n_t
  MatrixXcd c_hat;  ///< beamspace estimate, mmwave only
};

/// Dense realified D_c for the beamspace model: F_c = (U_{n_t}^H B)^T kron U_{n_r}.
MatrixXd build_beamspace_d_matrix(const TrainingBlock& training, double cfo_rad, Index n_r);

/// EM initialization for the sparse prior: sparsity 0.1 and an active variance that puts
/// the mean measurement energy E||Ax||^2 / M at sigma_w^2.
PriorHyperparams initial_bg_prior(const LinearOperator& a, double sigma_w_sq);

/// Stage 2: GAMP-EM on the sign model with the phase ramp of `omega_hat` compensated.
ChannelSolution estimate_channel(const TrainingBlock& training, const VectorXd& y,
                                 double omega_hat, double sigma_w_sq, ChannelFamily family,
                                 const GampConfig& config);

void write_trace_csv(std::ostream& os, const std::vector<GampTraceRow>& trace);

}  // namespace onebit
