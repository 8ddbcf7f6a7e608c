#include "onebit/crb.hpp"

#include <cmath>

#include "onebit/normal.hpp"

namespace onebit {

namespace {

constexpr double kRcondLimit = 1e-12;
constexpr double kRidgeScale = 1e-12;

// Solves J x = b, adding a relative ridge when J is numerically singular.
VectorXd guarded_solve(MatrixXd j, const VectorXd& b, bool& regularized) {
  Eigen::LDLT<MatrixXd> ldlt(j);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() >= kRcondLimit)) {
    const double ridge = kRidgeScale * j.trace() / static_cast<double>(j.rows());
    j.diagonal().array() += ridge;
    ldlt.compute(j);
    regularized = true;
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 0.0)) {
      throw DegenerateInformation("channel block of the Fisher information is singular");
    }
  }
  return ldlt.solve(b);
}

MatrixXd kron_identity(const MatrixXd& k, Index n_r) {
  MatrixXd d = MatrixXd::Zero(k.rows() * n_r, k.cols() * n_r);
  for (Index c = 0; c < k.cols(); ++c) {
    for (Index row = 0; row < k.rows(); ++row) {
      for (Index r = 0; r < n_r; ++r) d(row * n_r + r, c * n_r + r) = k(row, c);
    }
  }
  return d;
}

double finish_bound(double schur) {
  if (!(schur > 0.0) || !std::isfinite(schur)) {
    throw DegenerateInformation("no information about the CFO after removing the channel");
  }
  return 1.0 / schur;
}

}  // namespace

MatrixXd FisherPieces::full() const {
  const Index n = j_hh.rows();
  MatrixXd j(n + 1, n + 1);
  j(0, 0) = j_ww;
  j.block(0, 1, 1, n) = j_wh;
  j.block(1, 0, n, 1) = j_wh.transpose();
  j.bottomRightCorner(n, n) = j_hh;
  return j;
}

double phi_weight(double projection, double sigma_w_sq) {
  if (!(sigma_w_sq > 0.0)) throw InvalidParameter("sigma_w_sq must be positive");
  const double u = projection / std::sqrt(sigma_w_sq);
  const double e = -u * u;
  return (std::exp(e - normal::log_cdf(u)) + std::exp(e - normal::log_cdf(-u))) /
         (kTwoPi * sigma_w_sq);
}

VectorXd phi_weights(const MatrixXd& d_matrix, const VectorXd& h, double sigma_w_sq) {
  if (d_matrix.cols() != h.size()) throw InvalidDimension("phi_weights: D and h disagree");
  const VectorXd proj = d_matrix * h;
  return proj.unaryExpr([sigma_w_sq](double v) { return phi_weight(v, sigma_w_sq); });
}

MatrixXd d_dot_kron_factor(const TrainingBlock& training, double cfo_rad) {
  const Index n_t = training.n_t();
  const Index n_p = training.n_p();
  const MatrixXd tr_t = training.entries.real().transpose();
  const MatrixXd ti_t = training.entries.imag().transpose();
  VectorXd a(n_p);
  VectorXd s(n_p);
  VectorXd c(n_p);
  for (Index i = 0; i < n_p; ++i) {
    a(i) = static_cast<double>(i);
    s(i) = std::sin(a(i) * cfo_rad);
    c(i) = std::cos(a(i) * cfo_rad);
  }
  // dF_R/dw = diag(a)(-diag(s) T_R^T - diag(c) T_I^T), dF_I/dw = diag(a)(diag(c) T_R^T - diag(s) T_I^T)
  const MatrixXd dfr =
      a.asDiagonal() * (-(s.asDiagonal() * tr_t) - c.asDiagonal() * ti_t);
  const MatrixXd dfi = a.asDiagonal() * (c.asDiagonal() * tr_t - s.asDiagonal() * ti_t);
  MatrixXd k(2 * n_p, 2 * n_t);
  k.topLeftCorner(n_p, n_t) = dfr;
  k.topRightCorner(n_p, n_t) = -dfi;
  k.bottomLeftCorner(n_p, n_t) = dfi;
  k.bottomRightCorner(n_p, n_t) = dfr;
  return k;
}

MatrixXd d_dot(const TrainingBlock& training, double cfo_rad, Index n_r) {
  if (n_r <= 0) throw InvalidDimension("n_r must be positive");
  return kron_identity(d_dot_kron_factor(training, cfo_rad), n_r);
}

FisherPieces fim_from_matrices(const MatrixXd& d_matrix, const MatrixXd& d_dot_matrix,
                               const VectorXd& h, double sigma_w_sq) {
  if (d_matrix.rows() != d_dot_matrix.rows() || d_matrix.cols() != d_dot_matrix.cols() ||
      d_matrix.cols() != h.size()) {
    throw InvalidDimension("fim: D, Ddot and h shapes disagree");
  }
  FisherPieces f;
  f.lambda_diag = phi_weights(d_matrix, h, sigma_w_sq);
  const VectorXd dh = d_dot_matrix * h;
  const VectorXd weighted = f.lambda_diag.cwiseProduct(dh);
  f.j_ww = dh.dot(weighted);
  f.j_wh = (d_matrix.transpose() * weighted).transpose();
  f.j_hh = d_matrix.transpose() * f.lambda_diag.asDiagonal() * d_matrix;
  return f;
}

FisherPieces fim(const TrainingBlock& training, double cfo_rad, const VectorXd& h,
                 double sigma_w_sq, Index n_r) {
  const Index n_t = training.n_t();
  if (n_r <= 0 || h.size() != 2 * n_r * n_t) throw InvalidDimension("fim: h has wrong length");
  const MatrixXd k = kron_factor(apply_cfo(training, cfo_rad));
  const MatrixXd kd = d_dot_kron_factor(training, cfo_rad);
  const Eigen::Map<const MatrixXd> x(h.data(), n_r, 2 * n_t);
  const MatrixXd proj = x * k.transpose();  // (D h) reshaped n_r x 2n_p
  const MatrixXd vel = x * kd.transpose();  // (Ddot h) reshaped
  const MatrixXd lam =
      proj.unaryExpr([sigma_w_sq](double v) { return phi_weight(v, sigma_w_sq); });

  FisherPieces f;
  f.lambda_diag = Eigen::Map<const VectorXd>(lam.data(), lam.size());
  const MatrixXd weighted = lam.cwiseProduct(vel);
  f.j_ww = weighted.cwiseProduct(vel).sum();
  const MatrixXd wh = weighted * k;  // n_r x 2n_t
  f.j_wh = Eigen::Map<const Eigen::RowVectorXd>(wh.data(), wh.size());
  const Index n = 2 * n_r * n_t;
  f.j_hh = MatrixXd::Zero(n, n);
  for (Index r = 0; r < n_r; ++r) {
    const MatrixXd block = k.transpose() * lam.row(r).transpose().asDiagonal() * k;
    for (Index c = 0; c < block.cols(); ++c) {
      for (Index c2 = 0; c2 < block.rows(); ++c2) f.j_hh(c2 * n_r + r, c * n_r + r) = block(c2, c);
    }
  }
  return f;
}

CfoBound crb_cfo(const FisherPieces& pieces) {
  CfoBound out;
  const VectorXd rhs = pieces.j_wh.transpose();
  const VectorXd sol = guarded_solve(pieces.j_hh, rhs, out.regularized);
  out.value = finish_bound(pieces.j_ww - rhs.dot(sol));
  return out;
}

CfoBound crb_cfo_structured(const TrainingBlock& training, double cfo_rad, const VectorXd& h,
                            double sigma_w_sq, Index n_r) {
  const Index n_t = training.n_t();
  if (n_r <= 0 || h.size() != 2 * n_r * n_t) throw InvalidDimension("crb: h has wrong length");
  const MatrixXd k = kron_factor(apply_cfo(training, cfo_rad));
  const MatrixXd kd = d_dot_kron_factor(training, cfo_rad);
  const Eigen::Map<const MatrixXd> x(h.data(), n_r, 2 * n_t);
  const MatrixXd proj = x * k.transpose();
  const MatrixXd vel = x * kd.transpose();
  const MatrixXd lam =
      proj.unaryExpr([sigma_w_sq](double v) { return phi_weight(v, sigma_w_sq); });
  const MatrixXd weighted = lam.cwiseProduct(vel);
  const MatrixXd wh = weighted * k;

  CfoBound out;
  double schur = weighted.cwiseProduct(vel).sum();
  for (Index r = 0; r < n_r; ++r) {
    const MatrixXd block = k.transpose() * lam.row(r).transpose().asDiagonal() * k;
    const VectorXd g = wh.row(r).transpose();
    schur -= g.dot(guarded_solve(block, g, out.regularized));
  }
  out.value = finish_bound(schur);
  return out;
}

}  // namespace onebit
