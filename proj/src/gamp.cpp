#include "onebit/gamp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "onebit/channel.hpp"
#include "onebit/normal.hpp"

namespace onebit {

namespace {

constexpr double kHyperMin = 1e-12;
constexpr double kHyperMax = 1e12;

double clamp_hyper(double v) { return std::clamp(v, kHyperMin, kHyperMax); }

double relative_change(double before, double after) {
  return std::abs(after - before) / std::max(std::abs(before), kHyperMin);
}

double log_normal_density(double x, double var) {
  return -0.5 * std::log(kTwoPi * var) - 0.5 * x * x / var;
}

struct DenoisedInput {
  VectorXd mean;
  VectorXd var;
  VectorXd support;
  VectorXd slab_mean;
  VectorXd slab_var;
};

void denoise_output(const OutputChannel& out, const VectorXd& p_hat, double tau_p,
                    VectorXd& z_hat, VectorXd& z_var) {
  const Index m = p_hat.size();
  z_hat.resize(m);
  z_var.resize(m);
  if (out.model == OutputModel::sign) {
    for (Index i = 0; i < m; ++i) {
      const ScalarMoments mo = output_denoiser_sign(p_hat(i), tau_p, out.y(i), out.noise_var);
      z_hat(i) = mo.mean;
      z_var(i) = mo.var;
    }
  } else {
    for (Index i = 0; i < m; ++i) {
      const ScalarMoments mo = output_denoiser_awgn(p_hat(i), tau_p, out.y(i), out.noise_var);
      z_hat(i) = mo.mean;
      z_var(i) = mo.var;
    }
  }
}

void denoise_input(const PriorHyperparams& prior, const VectorXd& r_hat, double tau_r,
                   DenoisedInput& d) {
  const Index n = r_hat.size();
  d.mean.resize(n);
  d.var.resize(n);
  if (prior.family == PriorFamily::gaussian) {
    for (Index i = 0; i < n; ++i) {
      const ScalarMoments mo = input_denoiser_gaussian(r_hat(i), tau_r, prior.sigma_x_sq);
      d.mean(i) = mo.mean;
      d.var(i) = mo.var;
    }
    return;
  }
  d.support.resize(n);
  d.slab_mean.resize(n);
  d.slab_var.resize(n);
  for (Index i = 0; i < n; ++i) {
    const SpikeSlabMoments mo = input_denoiser_bg(r_hat(i), tau_r, prior.sparsity,
                                                  prior.active_variance, prior.active_mean);
    d.mean(i) = mo.mean;
    d.var(i) = mo.var;
    d.support(i) = mo.support_prob;
    d.slab_mean(i) = mo.slab_mean;
    d.slab_var(i) = mo.slab_var;
  }
}

}  // namespace

void GampConfig::validate() const {
  if (max_iters < 1) throw InvalidParameter("max_iters must be >= 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw InvalidParameter("damping must lie in (0, 1]");
  if (!(tol > 0.0)) throw InvalidParameter("tol must be positive");
  if (!(variance_floor > 0.0)) throw InvalidParameter("variance_floor must be positive");
  if (em_max_iters < 1) throw InvalidParameter("em_max_iters must be >= 1");
  if (!(em_tol > 0.0)) throw InvalidParameter("em_tol must be positive");
  if (!(divergence_factor > 1.0)) throw InvalidParameter("divergence_factor must exceed 1");
}

PriorHyperparams PriorHyperparams::gaussian(double sigma_x_sq) {
  PriorHyperparams p;
  p.family = PriorFamily::gaussian;
  p.sigma_x_sq = sigma_x_sq;
  return p;
}

PriorHyperparams PriorHyperparams::bernoulli_gaussian(double sparsity, double active_variance,
                                                      double active_mean) {
  PriorHyperparams p;
  p.family = PriorFamily::bernoulli_gaussian;
  p.sparsity = sparsity;
  p.active_variance = active_variance;
  p.active_mean = active_mean;
  return p;
}

void PriorHyperparams::validate() const {
  if (family == PriorFamily::gaussian) {
    if (!(sigma_x_sq > 0.0)) throw InvalidParameter("sigma_x_sq must be positive");
  } else {
    if (!(sparsity > 0.0 && sparsity <= 1.0)) throw InvalidParameter("sparsity must lie in (0, 1]");
    if (!(active_variance > 0.0)) throw InvalidParameter("active_variance must be positive");
  }
}

double PriorHyperparams::mean() const {
  return family == PriorFamily::gaussian ? 0.0 : sparsity * active_mean;
}

double PriorHyperparams::variance() const {
  if (family == PriorFamily::gaussian) return sigma_x_sq;
  const double second = sparsity * (active_variance + active_mean * active_mean);
  return second - mean() * mean();
}

ScalarMoments output_denoiser_sign(double p_hat, double tau_p, double y, double sigma_w_sq) {
  if (tau_p <= 0.0) return {p_hat, 0.0};
  const double total = tau_p + sigma_w_sq;
  const double scale = std::sqrt(total);
  const double eta = y * p_hat / scale;
  const double rho = normal::inverse_mills(eta);
  ScalarMoments m;
  m.mean = p_hat + y * tau_p * rho / scale;
  m.var = tau_p - tau_p * tau_p * rho * (eta + rho) / total;
  m.var = std::clamp(m.var, 0.0, tau_p);
  return m;
}

ScalarMoments output_denoiser_awgn(double p_hat, double tau_p, double y, double sigma_w_sq) {
  if (tau_p <= 0.0) return {p_hat, 0.0};
  const double total = tau_p + sigma_w_sq;
  return {(tau_p * y + sigma_w_sq * p_hat) / total, tau_p * sigma_w_sq / total};
}

ScalarMoments input_denoiser_gaussian(double r_hat, double tau_r, double sigma_x_sq) {
  const double total = sigma_x_sq + tau_r;
  return {sigma_x_sq * r_hat / total, sigma_x_sq * tau_r / total};
}

SpikeSlabMoments input_denoiser_bg(double r_hat, double tau_r, double lambda, double active_var,
                                   double active_mean) {
  SpikeSlabMoments m;
  const double total = active_var + tau_r;
  m.slab_mean = (active_var * r_hat + tau_r * active_mean) / total;
  m.slab_var = active_var * tau_r / total;
  // log odds of spike versus slab
  const double log_odds = std::log1p(-lambda) - std::log(lambda) +
                          log_normal_density(r_hat, tau_r) -
                          log_normal_density(r_hat - active_mean, total);
  m.support_prob = log_odds > 0.0 ? std::exp(-log_odds) / (1.0 + std::exp(-log_odds))
                                  : 1.0 / (1.0 + std::exp(log_odds));
  m.mean = m.support_prob * m.slab_mean;
  m.var = m.support_prob * m.slab_var +
          m.support_prob * (1.0 - m.support_prob) * m.slab_mean * m.slab_mean;
  return m;
}

DenseOperator::DenseOperator(MatrixXd a) : a_(std::move(a)), frob_(a_.squaredNorm()) {}

KronOperator::KronOperator(MatrixXd k, Index n_r)
    : k_(std::move(k)), n_r_(n_r), frob_(static_cast<double>(n_r) * k_.squaredNorm()) {
  if (n_r_ <= 0) throw InvalidDimension("n_r must be positive");
}

VectorXd KronOperator::apply(const VectorXd& x) const {
  if (x.size() != cols()) throw InvalidDimension("KronOperator::apply: length mismatch");
  const Eigen::Map<const MatrixXd> xm(x.data(), n_r_, k_.cols());
  VectorXd out(rows());
  Eigen::Map<MatrixXd>(out.data(), n_r_, k_.rows()).noalias() = xm * k_.transpose();
  return out;
}

VectorXd KronOperator::apply_transpose(const VectorXd& s) const {
  if (s.size() != rows()) throw InvalidDimension("KronOperator::apply_transpose: length mismatch");
  const Eigen::Map<const MatrixXd> sm(s.data(), n_r_, k_.rows());
  VectorXd out(cols());
  Eigen::Map<MatrixXd>(out.data(), n_r_, k_.cols()).noalias() = sm * k_;
  return out;
}

BeamspaceOperator::BeamspaceOperator(MatrixXcd b_c, MatrixXcd u_r)
    : b_c_(std::move(b_c)),
      u_r_(std::move(u_r)),
      frob_(2.0 * u_r_.squaredNorm() * b_c_.squaredNorm()) {}

VectorXd BeamspaceOperator::apply(const VectorXd& c) const {
  if (c.size() != cols()) throw InvalidDimension("BeamspaceOperator::apply: length mismatch");
  const MatrixXcd cm = unrealify_matrix(c, u_r_.cols(), b_c_.rows());
  const MatrixXcd z = (u_r_ * cm) * b_c_;
  return realify_matrix(z);
}

VectorXd BeamspaceOperator::apply_transpose(const VectorXd& s) const {
  if (s.size() != rows()) {
    throw InvalidDimension("BeamspaceOperator::apply_transpose: length mismatch");
  }
  const MatrixXcd sm = unrealify_matrix(s, u_r_.rows(), b_c_.cols());
  const MatrixXcd r = u_r_.adjoint() * (sm * b_c_.adjoint());
  return realify_matrix(r);
}

ChannelEstimate gamp_solve(const LinearOperator& a, const OutputChannel& out,
                           const PriorHyperparams& prior, const GampConfig& config,
                           GampState* state) {
  config.validate();
  prior.validate();
  if (out.y.size() != a.rows()) {
    throw InvalidDimension("measurement length " + std::to_string(out.y.size()) +
                           " does not match operator rows " + std::to_string(a.rows()));
  }
  if (!(out.noise_var > 0.0)) throw InvalidParameter("noise variance must be positive");

  const Index m = a.rows();
  const Index n = a.cols();
  const double frob = a.frobenius_sq();
  const double row_gain = frob / static_cast<double>(m);
  const double col_gain = frob / static_cast<double>(n);
  const double floor = config.variance_floor;
  const double beta = config.damping;

  GampState local;
  GampState& st = state ? *state : local;
  const bool warm = st.x_hat.size() == n && st.s_hat.size() == m;
  if (!warm) {
    st.x_hat = VectorXd::Constant(n, prior.mean());
    st.tau_x = prior.variance();
    st.s_hat = VectorXd::Zero(m);
    st.tau_s = 0.0;
  }
  const double init_scale =
      std::sqrt(static_cast<double>(n) * (prior.variance() + prior.mean() * prior.mean()));

  ChannelEstimate est;
  est.learned_hyperparams = prior;
  DenoisedInput den;
  VectorXd z_hat;
  VectorXd z_var;
  bool first = !warm;

  for (int it = 0; it < config.max_iters; ++it) {
    const GampState previous = st;

    // output side
    const double tau_p = std::max(row_gain * st.tau_x, floor);
    const VectorXd p_hat = a.apply(st.x_hat) - tau_p * st.s_hat;
    denoise_output(out, p_hat, tau_p, z_hat, z_var);
    const VectorXd s_new = (z_hat - p_hat) / tau_p;
    const double tau_s_new = std::max((1.0 - z_var.mean() / tau_p) / tau_p, floor);
    if (first) {
      st.s_hat = s_new;
      st.tau_s = tau_s_new;
    } else {
      st.s_hat = beta * s_new + (1.0 - beta) * st.s_hat;
      st.tau_s = beta * tau_s_new + (1.0 - beta) * st.tau_s;
    }

    // input side
    const double tau_r = 1.0 / std::max(col_gain * st.tau_s, floor);
    const VectorXd r_hat = st.x_hat + tau_r * a.apply_transpose(st.s_hat);
    denoise_input(prior, r_hat, tau_r, den);
    if (first) {
      st.x_hat = den.mean;
      st.tau_x = std::max(den.var.mean(), floor);
    } else {
      st.x_hat = beta * den.mean + (1.0 - beta) * st.x_hat;
      st.tau_x = std::max(beta * den.var.mean() + (1.0 - beta) * st.tau_x, floor);
    }
    first = false;

    const double norm = st.x_hat.norm();
    if (!std::isfinite(norm) || !std::isfinite(st.tau_x) ||
        norm > config.divergence_factor * std::max(init_scale, floor)) {
      st = previous;
      est.diverged = true;
      break;
    }
    const double residual = (st.x_hat - previous.x_hat).norm() / std::max(norm, floor);
    ++est.iterations_used;
    est.x_var = den.var;
    est.support_prob = den.support;
    est.slab_mean = den.slab_mean;
    est.slab_var = den.slab_var;
    if (config.record_trace) est.trace.push_back({0, it, residual, prior});
    if (residual < config.tol) {
      est.converged = true;
      break;
    }
  }

  est.x_hat = st.x_hat;
  if (est.x_var.size() != n) est.x_var = VectorXd::Constant(n, st.tau_x);
  return est;
}

ChannelEstimate gamp_solve(const MatrixXd& a, const VectorXd& y, double sigma_w_sq,
                           const PriorHyperparams& prior, const GampConfig& config) {
  const DenseOperator op(a);
  return gamp_solve(op, OutputChannel{OutputModel::sign, y, sigma_w_sq}, prior, config);
}

PriorHyperparams em_update(const ChannelEstimate& est, const PriorHyperparams& current) {
  PriorHyperparams next = current;
  if (est.x_hat.size() == 0 || est.x_var.size() != est.x_hat.size()) {
    throw InvalidDimension("em_update needs a completed GAMP pass");
  }
  if (current.family == PriorFamily::gaussian) {
    next.sigma_x_sq = clamp_hyper((est.x_hat.array().square() + est.x_var.array()).mean());
    return next;
  }
  if (est.support_prob.size() != est.x_hat.size()) {
    throw InvalidDimension("em_update needs support probabilities for the sparse prior");
  }
  const double total_support = est.support_prob.sum();
  next.sparsity = std::clamp(total_support / static_cast<double>(est.support_prob.size()),
                             kHyperMin, 1.0);
  if (total_support > 0.0) {
    const auto centered = est.slab_mean.array() - current.active_mean;
    const double weighted =
        (est.support_prob.array() * (centered.square() + est.slab_var.array())).sum();
    next.active_variance = clamp_hyper(weighted / total_support);
  }
  return next;
}

namespace {

double hyper_change(const PriorHyperparams& a, const PriorHyperparams& b) {
  if (a.family == PriorFamily::gaussian) return relative_change(a.sigma_x_sq, b.sigma_x_sq);
  return std::max(relative_change(a.sparsity, b.sparsity),
                  relative_change(a.active_variance, b.active_variance));
}

}  // namespace

ChannelEstimate gamp_em(const LinearOperator& a, const OutputChannel& out,
                        PriorHyperparams init, const GampConfig& config) {
  config.validate();
  GampState state;
  PriorHyperparams prior = init;
  ChannelEstimate est;
  int total_iters = 0;
  std::vector<GampTraceRow> trace;
  const int passes = config.em_enabled ? config.em_max_iters : 1;
  for (int pass = 0; pass < passes; ++pass) {
    est = gamp_solve(a, out, prior, config, &state);
    total_iters += est.iterations_used;
    est.em_passes = pass + 1;
    if (config.record_trace) {
      for (auto& row : est.trace) {
        row.em_pass = pass;
        trace.push_back(row);
      }
    }
    if (!config.em_enabled || est.diverged) break;
    const PriorHyperparams next = em_update(est, prior);
    const double change = hyper_change(prior, next);
    prior = next;
    if (change < config.em_tol) break;
  }
  est.learned_hyperparams = prior;
  est.iterations_used = total_iters;
  est.trace = std::move(trace);
  return est;
}

MatrixXd build_beamspace_d_matrix(const TrainingBlock& training, double cfo_rad, Index n_r) {
  if (n_r <= 0) throw InvalidDimension("n_r must be positive");
  const MatrixXcd b_c = dft_matrix(training.n_t()).adjoint() * apply_cfo(training, cfo_rad);
  const MatrixXcd u_r = dft_matrix(n_r);
  // F_c = B_c^T kron U_r
  const Index n_t = b_c.rows();
  const Index n_p = b_c.cols();
  MatrixXcd f(n_p * n_r, n_t * n_r);
  for (Index p = 0; p < n_p; ++p) {
    for (Index t = 0; t < n_t; ++t) f.block(p * n_r, t * n_r, n_r, n_r) = b_c(t, p) * u_r;
  }
  MatrixXd d(2 * f.rows(), 2 * f.cols());
  d.topLeftCorner(f.rows(), f.cols()) = f.real();
  d.topRightCorner(f.rows(), f.cols()) = -f.imag();
  d.bottomLeftCorner(f.rows(), f.cols()) = f.imag();
  d.bottomRightCorner(f.rows(), f.cols()) = f.real();
  return d;
}

PriorHyperparams initial_bg_prior(const LinearOperator& a, double sigma_w_sq) {
  constexpr double kInitialSparsity = 0.1;
  const double active =
      static_cast<double>(a.rows()) * sigma_w_sq / (kInitialSparsity * a.frobenius_sq());
  return PriorHyperparams::bernoulli_gaussian(kInitialSparsity, clamp_hyper(active));
}

ChannelSolution estimate_channel(const TrainingBlock& training, const VectorXd& y,
                                 double omega_hat, double sigma_w_sq, ChannelFamily family,
                                 const GampConfig& config) {
  const Index n_t = training.n_t();
  const Index n_p = training.n_p();
  if (n_p <= 0 || y.size() == 0 || y.size() % (2 * n_p) != 0) {
    throw InvalidDimension("sign vector length does not match the training block");
  }
  const Index n_r = y.size() / (2 * n_p);
  const OutputChannel out{OutputModel::sign, y, sigma_w_sq};
  const MatrixXcd b = apply_cfo(training, omega_hat);

  ChannelSolution sol;
  if (family == ChannelFamily::gaussian) {
    const KronOperator op(kron_factor(b), n_r);
    sol.estimate = gamp_em(op, out, PriorHyperparams::gaussian(1.0), config);
    sol.h_hat = unrealify_matrix(sol.estimate.x_hat, n_r, n_t);
  } else {
    const BeamspaceOperator op(dft_matrix(n_t).adjoint() * b, dft_matrix(n_r));
    sol.estimate = gamp_em(op, out, initial_bg_prior(op, sigma_w_sq), config);
    sol.c_hat = unrealify_matrix(sol.estimate.x_hat, n_r, n_t);
    sol.h_hat = from_beamspace({sol.c_hat});
  }
  return sol;
}

void write_trace_csv(std::ostream& os, const std::vector<GampTraceRow>& trace) {
  os << "em_pass,iteration,residual,family,sigma_x_sq,sparsity,active_variance\n";
  char buf[256];
  for (const auto& row : trace) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%s,%.9g,%.9g,%.9g\n", row.em_pass, row.iteration,
                  row.residual,
                  row.prior.family == PriorFamily::gaussian ? "gaussian" : "bernoulli_gaussian",
                  row.prior.sigma_x_sq, row.prior.sparsity, row.prior.active_variance);
    os << buf;
  }
}

}  // namespace onebit
