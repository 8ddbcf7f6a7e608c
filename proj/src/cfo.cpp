#include "onebit/cfo.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace onebit {

namespace {

MatrixXcd observation_matrix(const VectorXd& y, Index n_p) {
  if (n_p <= 0 || y.size() == 0 || y.size() % (2 * n_p) != 0) {
    throw InvalidDimension("sign vector length " + std::to_string(y.size()) +
                           " is not a multiple of 2 n_p = " + std::to_string(2 * n_p));
  }
  const Index n_r = y.size() / (2 * n_p);
  return unrealify_matrix(y, n_r, n_p);
}

// Index of the largest value; the lowest index wins ties.
std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

void CfoSearchConfig::validate() const {
  if (n1 < 2) throw InvalidParameter("n1 must be >= 2");
  if (n2 < 1) throw InvalidParameter("n2 must be >= 1");
  if (refine_max_iters < 0) throw InvalidParameter("refine_max_iters must be >= 0");
  if (!(refine_grad_tol > 0.0)) throw InvalidParameter("refine_grad_tol must be positive");
  if (initial_step < 0.0) throw InvalidParameter("initial_step must be >= 0");
  if (!(shrink > 0.0 && shrink < 1.0)) throw InvalidParameter("shrink must lie in (0, 1)");
  if (!(sufficient_increase > 0.0 && sufficient_increase < 1.0)) {
    throw InvalidParameter("sufficient_increase must lie in (0, 1)");
  }
}

double CfoSearchConfig::first_step() const {
  if (initial_step > 0.0) return initial_step;
  return kTwoPi / (10.0 * static_cast<double>(n1) * static_cast<double>(n2));
}

void ModelVariances::validate() const {
  if (!(sigma_h_sq > 0.0) || !(sigma_w_sq > 0.0)) {
    throw InvalidParameter("model variances must be positive");
  }
}

VectorXd bussgang_cz_diag(const TrainingBlock& training, const ModelVariances& vars, Index n_r) {
  vars.validate();
  if (n_r <= 0) throw InvalidDimension("n_r must be positive");
  const Index n_p = training.n_p();
  // the phase ramp does not change column norms, so c_t comes straight from T
  const VectorXd c_t = training.entries.colwise().squaredNorm().transpose();
  VectorXd diag(2 * n_p * n_r);
  for (Index half = 0; half < 2; ++half) {
    for (Index p = 0; p < n_p; ++p) {
      const double v = vars.sigma_h_sq * c_t(p) + vars.sigma_w_sq;
      diag.segment((half * n_p + p) * n_r, n_r).setConstant(v);
    }
  }
  return diag;
}

MatrixXd bussgang_matrix(const TrainingBlock& training, double cfo_rad,
                         const ModelVariances& vars, Index n_r) {
  const VectorXd cz = bussgang_cz_diag(training, vars, n_r);
  const VectorXd row_scale = std::sqrt(2.0 / kPi) * cz.array().rsqrt();
  return row_scale.asDiagonal() * build_d_matrix(training, cfo_rad, n_r);
}

CfoObjective::CfoObjective(const VectorXd& y, const TrainingBlock& training,
                           std::optional<ModelVariances> general)
    : y_(observation_matrix(y, training.n_p())), t_adj_(training.entries.adjoint()) {
  if (general) {
    general->validate();
    const VectorXd c_t = training.entries.colwise().squaredNorm().transpose();
    for (Index p = 0; p < y_.cols(); ++p) {
      y_.col(p) /= std::sqrt(general->sigma_h_sq * c_t(p) + general->sigma_w_sq);
    }
    scale_ = 2.0 / kPi;
  }
}

double CfoObjective::value(double omega) const {
  const VectorXcd phase = vandermonde(-omega, n_p());
  const MatrixXcd z = y_ * (phase.asDiagonal() * t_adj_);
  return scale_ * z.squaredNorm();
}

std::pair<double, double> CfoObjective::value_and_gradient(double omega) const {
  const Index n = n_p();
  const VectorXcd phase = vandermonde(-omega, n);
  VectorXcd dphase(n);
  for (Index i = 0; i < n; ++i) dphase(i) = cdouble(0.0, -static_cast<double>(i)) * phase(i);
  const MatrixXcd z = y_ * (phase.asDiagonal() * t_adj_);
  const MatrixXcd dz = y_ * (dphase.asDiagonal() * t_adj_);
  // d/dw ||Z||^2 = 2 Re <Z, dZ/dw>
  const double grad = 2.0 * (z.conjugate().cwiseProduct(dz)).sum().real();
  return {scale_ * z.squaredNorm(), scale_ * grad};
}

double CfoObjective::gradient(double omega) const { return value_and_gradient(omega).second; }

double objective(const VectorXd& y, const TrainingBlock& training, double omega,
                 const ModelVariances& vars, bool qpsk_fast_path) {
  const CfoObjective obj(y, training,
                         qpsk_fast_path ? std::nullopt : std::optional<ModelVariances>(vars));
  return obj.value(omega);
}

double objective_gradient(const VectorXd& y, const TrainingBlock& training, double omega) {
  return CfoObjective(y, training).gradient(omega);
}

std::vector<double> coarse_grid(Index n1) {
  if (n1 < 1) throw InvalidParameter("grid size must be positive");
  std::vector<double> grid(static_cast<std::size_t>(n1));
  for (Index k = 0; k < n1; ++k) {
    grid[static_cast<std::size_t>(k)] = kTwoPi * static_cast<double>(k) / static_cast<double>(n1);
  }
  return grid;
}

std::vector<double> refined_grid(double center, Index n1, Index n2) {
  if (n1 < 1 || n2 < 1) throw InvalidParameter("grid sizes must be positive");
  const double step = kTwoPi / (static_cast<double>(n1) * static_cast<double>(n2));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(2 * n2 - 1));
  for (Index k = -(n2 - 1); k <= n2 - 1; ++k) {
    grid.push_back(wrap_angle(center + static_cast<double>(k) * step));
  }
  return grid;
}

DetectionResult detect(const CfoObjective& obj, const CfoSearchConfig& config) {
  config.validate();
  DetectionResult out;

  const auto coarse = coarse_grid(config.n1);
  std::vector<double> values(coarse.size());
  for (std::size_t k = 0; k < coarse.size(); ++k) values[k] = obj.value(coarse[k]);
  const std::size_t kc = argmax(values);
  out.omega_coarse = coarse[kc];
  out.objective_coarse = values[kc];

  const auto fine = refined_grid(out.omega_coarse, config.n1, config.n2);
  values.resize(fine.size());
  for (std::size_t k = 0; k < fine.size(); ++k) values[k] = obj.value(fine[k]);
  const std::size_t kr = argmax(values);
  out.omega_refined = fine[kr];
  out.objective_refined = values[kr];
  return out;
}

CfoEstimate refine(const CfoObjective& obj, double omega_start, const CfoSearchConfig& config) {
  config.validate();
  CfoEstimate est;
  double omega = wrap_angle(omega_start);
  auto [s, g] = obj.value_and_gradient(omega);
  est.omega_coarse = est.omega_refined = omega;
  est.objective_at_coarse = est.objective_at_refined = s;
  est.ascent_trace.push_back(s);

  const double min_step = 8.0 * std::numeric_limits<double>::epsilon() * kTwoPi;
  double step = config.first_step();
  bool converged = false;
  int iters = 0;
  while (iters < config.refine_max_iters) {
    if (!(s > 0.0) || std::abs(g) / s < config.refine_grad_tol) {
      converged = true;
      break;
    }
    const double dir = g > 0.0 ? 1.0 : -1.0;
    bool accepted = false;
    double trial = omega;
    double s_trial = s;
    while (step >= min_step) {
      trial = wrap_angle(omega + dir * step);
      s_trial = obj.value(trial);
      if (s_trial >= s + config.sufficient_increase * step * std::abs(g)) {
        accepted = true;
        break;
      }
      step *= config.shrink;
    }
    if (!accepted) {
      // no admissible ascent step above floating-point resolution: stationary
      converged = true;
      break;
    }
    omega = trial;
    std::tie(s, g) = obj.value_and_gradient(omega);
    est.ascent_trace.push_back(s);
    ++iters;
    step /= config.shrink;
  }
  if (!converged && s > 0.0 && std::abs(g) / s < config.refine_grad_tol) converged = true;

  est.omega_final = omega;
  est.objective_at_final = s;
  est.iterations_used = iters;
  est.converged = converged;
  return est;
}

CfoEstimate estimate_cfo(const VectorXd& y, const TrainingBlock& training,
                         const CfoSearchConfig& config, const ModelVariances& vars) {
  config.validate();
  const CfoObjective obj(y, training,
                         config.qpsk_fast_path ? std::nullopt
                                               : std::optional<ModelVariances>(vars));
  const DetectionResult det = detect(obj, config);
  CfoEstimate est = refine(obj, det.omega_refined, config);
  est.omega_coarse = det.omega_coarse;
  est.omega_refined = det.omega_refined;
  est.objective_at_coarse = det.objective_coarse;
  est.objective_at_refined = det.objective_refined;
  return est;
}

}  // namespace onebit
