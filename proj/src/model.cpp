#include "onebit/model.hpp"

#include <random>
#include <string>

#include "onebit/rng.hpp"

namespace onebit {

namespace {

std::string shape(const MatrixXcd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

double sgn(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace

void SystemDims::validate() const {
  if (n_t <= 0 || n_r <= 0 || n_p <= 0) {
    throw InvalidDimension("system dimensions must be positive (n_t=" + std::to_string(n_t) +
                           ", n_r=" + std::to_string(n_r) + ", n_p=" + std::to_string(n_p) +
                           ")");
  }
}

bool TrainingBlock::is_qpsk() const {
  for (Index c = 0; c < entries.cols(); ++c) {
    for (Index r = 0; r < entries.rows(); ++r) {
      const cdouble v = entries(r, c);
      if (std::abs(v.real()) != 1.0 || std::abs(v.imag()) != 1.0) return false;
    }
  }
  return entries.size() > 0;
}

TrainingBlock TrainingBlock::qpsk(Index n_t, Index n_p, std::uint64_t seed) {
  if (n_t <= 0 || n_p <= 0) throw InvalidDimension("training block must be nonempty");
  Rng rng(seed);
  std::uniform_int_distribution<int> bit(0, 1);
  TrainingBlock t;
  t.entries.resize(n_t, n_p);
  for (Index c = 0; c < n_p; ++c) {
    for (Index r = 0; r < n_t; ++r) {
      const double re = bit(rng) ? 1.0 : -1.0;
      const double im = bit(rng) ? 1.0 : -1.0;
      t.entries(r, c) = cdouble(re, im);
    }
  }
  return t;
}

void ComplexModelInstance::validate() const {
  dims.validate();
  if (training.n_t() != dims.n_t || training.n_p() != dims.n_p) {
    throw InvalidDimension("training block is " + shape(training.entries) + ", expected " +
                           std::to_string(dims.n_t) + "x" + std::to_string(dims.n_p));
  }
  if (channel.rows() != dims.n_r || channel.cols() != dims.n_t) {
    throw InvalidDimension("channel is " + shape(channel) + ", expected " +
                           std::to_string(dims.n_r) + "x" + std::to_string(dims.n_t));
  }
  if (!(cfo_rad >= 0.0 && cfo_rad < kTwoPi)) {
    throw InvalidParameter("cfo_rad must lie in [0, 2pi)");
  }
  if (!(noise_var_per_dim > 0.0)) throw InvalidParameter("noise variance must be positive");
}

VectorXcd vandermonde(double theta, Index n) {
  if (n <= 0) throw InvalidDimension("vandermonde length must be positive");
  VectorXcd a(n);
  for (Index i = 0; i < n; ++i) a(i) = std::polar(1.0, static_cast<double>(i) * theta);
  return a;
}

cdouble csgn(cdouble z) { return {sgn(z.real()), sgn(z.imag())}; }

MatrixXcd csgn(const MatrixXcd& z) {
  return z.unaryExpr([](const cdouble& v) { return csgn(v); });
}

MatrixXcd apply_cfo(const TrainingBlock& training, double cfo_rad) {
  if (training.entries.size() == 0) throw InvalidDimension("training block is empty");
  return training.entries * vandermonde(cfo_rad, training.n_p()).asDiagonal();
}

MatrixXcd simulate_observation(const ComplexModelInstance& inst, std::uint64_t rng_seed) {
  inst.validate();
  Rng rng(rng_seed);
  const MatrixXcd noise =
      complex_gaussian(inst.dims.n_r, inst.dims.n_p, inst.noise_var_per_dim, rng);
  return csgn(inst.channel * apply_cfo(inst.training, inst.cfo_rad) + noise);
}

MatrixXd kron_factor(const MatrixXcd& b) {
  const Index n_t = b.rows();
  const Index n_p = b.cols();
  MatrixXd k(2 * n_p, 2 * n_t);
  const MatrixXd br_t = b.real().transpose();
  const MatrixXd bi_t = b.imag().transpose();
  k.topLeftCorner(n_p, n_t) = br_t;
  k.topRightCorner(n_p, n_t) = -bi_t;
  k.bottomLeftCorner(n_p, n_t) = bi_t;
  k.bottomRightCorner(n_p, n_t) = br_t;
  return k;
}

MatrixXd build_d_matrix(const TrainingBlock& training, double cfo_rad, Index n_r) {
  if (n_r <= 0) throw InvalidDimension("n_r must be positive");
  const MatrixXd k = kron_factor(apply_cfo(training, cfo_rad));
  // K kron I_{n_r}
  MatrixXd d = MatrixXd::Zero(k.rows() * n_r, k.cols() * n_r);
  for (Index c = 0; c < k.cols(); ++c) {
    for (Index row = 0; row < k.rows(); ++row) {
      const double v = k(row, c);
      for (Index r = 0; r < n_r; ++r) d(row * n_r + r, c * n_r + r) = v;
    }
  }
  return d;
}

RealifiedModel realify(const ComplexModelInstance& inst, const MatrixXcd& observation) {
  inst.validate();
  if (observation.rows() != inst.dims.n_r || observation.cols() != inst.dims.n_p) {
    throw InvalidDimension("observation is " + shape(observation) + ", expected " +
                           std::to_string(inst.dims.n_r) + "x" + std::to_string(inst.dims.n_p));
  }
  RealifiedModel m;
  m.d_matrix = build_d_matrix(inst.training, inst.cfo_rad, inst.dims.n_r);
  m.y = realify_matrix(observation);
  m.noise_var = inst.noise_var_per_dim;
  return m;
}

VectorXcd vec(const MatrixXcd& m) {
  return Eigen::Map<const VectorXcd>(m.data(), m.size());
}

MatrixXcd unvec(const VectorXcd& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw InvalidDimension("unvec: length does not match shape");
  return Eigen::Map<const MatrixXcd>(v.data(), rows, cols);
}

VectorXd stack_real(const VectorXcd& v) {
  VectorXd out(2 * v.size());
  out.head(v.size()) = v.real();
  out.tail(v.size()) = v.imag();
  return out;
}

VectorXcd unstack_complex(const VectorXd& v) {
  if (v.size() % 2 != 0) throw InvalidDimension("stacked real vector must have even length");
  const Index n = v.size() / 2;
  VectorXcd out(n);
  out.real() = v.head(n);
  out.imag() = v.tail(n);
  return out;
}

}  // namespace onebit
