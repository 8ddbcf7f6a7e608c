#include "onebit/channel.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "onebit/rng.hpp"

namespace onebit {

namespace {

constexpr double kHalfPi = 0.5 * kPi;

// Laplacian draw with the given standard deviation, rejected until the sum lies in
// [-pi/2, pi/2).
double truncated_laplacian_angle(double center, double sd, Rng& rng) {
  const double scale = sd / std::sqrt(2.0);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double p = u(rng);
    const double offset = -scale * (p < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(p));
    const double angle = center + offset;
    if (angle >= -kHalfPi && angle < kHalfPi) return angle;
  }
  return center;
}

}  // namespace

void GaussianChannelParams::validate() const {
  if (!(sigma_h_sq > 0.0)) throw InvalidParameter("sigma_h_sq must be positive");
}

void MmWaveChannelParams::validate() const {
  if (n_clusters < 1) throw InvalidParameter("n_clusters must be >= 1");
  if (static_cast<Index>(rays_per_cluster.size()) != n_clusters) {
    throw InvalidParameter("rays_per_cluster needs one entry per cluster");
  }
  for (Index k : rays_per_cluster) {
    if (k < 1) throw InvalidParameter("every cluster needs at least one ray");
  }
  if (!(angle_spread_deg > 0.0)) throw InvalidParameter("angle_spread_deg must be positive");
  if (!(antenna_spacing_ratio > 0.0)) {
    throw InvalidParameter("antenna_spacing_ratio must be positive");
  }
}

MmWaveChannelParams MmWaveChannelParams::uniform(Index n_clusters, Index rays, double spread_deg,
                                                 double spacing_ratio) {
  MmWaveChannelParams p;
  p.n_clusters = n_clusters;
  p.rays_per_cluster.assign(static_cast<std::size_t>(std::max<Index>(n_clusters, 0)), rays);
  p.angle_spread_deg = spread_deg;
  p.antenna_spacing_ratio = spacing_ratio;
  return p;
}

MatrixXcd sample_gaussian_channel(const SystemDims& dims, const GaussianChannelParams& params,
                                  std::uint64_t seed) {
  params.validate();
  if (dims.n_r <= 0 || dims.n_t <= 0) throw InvalidDimension("channel needs n_r, n_t > 0");
  Rng rng(seed);
  return complex_gaussian(dims.n_r, dims.n_t, params.sigma_h_sq, rng);
}

MatrixXcd assemble_ray_channel(Index n_r, Index n_t,
                               const std::vector<std::vector<Ray>>& clusters) {
  if (clusters.empty()) throw InvalidParameter("at least one cluster is required");
  MatrixXcd h = MatrixXcd::Zero(n_r, n_t);
  for (const auto& rays : clusters) {
    if (rays.empty()) throw InvalidParameter("every cluster needs at least one ray");
    const double ray_norm = 1.0 / std::sqrt(static_cast<double>(rays.size()));
    for (const Ray& ray : rays) {
      h.noalias() += (ray.gain * ray_norm) * vandermonde(ray.omega_r, n_r) *
                     vandermonde(ray.omega_t, n_t).adjoint();
    }
  }
  return h / std::sqrt(static_cast<double>(clusters.size()));
}

MatrixXcd sample_mmwave_channel(const SystemDims& dims, const MmWaveChannelParams& params,
                                std::uint64_t seed) {
  params.validate();
  if (dims.n_r <= 0 || dims.n_t <= 0) throw InvalidDimension("channel needs n_r, n_t > 0");
  Rng rng(seed);
  std::uniform_real_distribution<double> center(-kHalfPi, kHalfPi);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double spread = params.angle_spread_deg * kPi / 180.0;
  const double spatial = kTwoPi * params.antenna_spacing_ratio;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  std::vector<std::vector<Ray>> clusters(static_cast<std::size_t>(params.n_clusters));
  for (Index n = 0; n < params.n_clusters; ++n) {
    const double aoa = center(rng);
    const double aod = center(rng);
    auto& rays = clusters[static_cast<std::size_t>(n)];
    rays.resize(static_cast<std::size_t>(params.rays_per_cluster[static_cast<std::size_t>(n)]));
    for (Ray& ray : rays) {
      const double theta_r = truncated_laplacian_angle(aoa, spread, rng);
      const double theta_t = truncated_laplacian_angle(aod, spread, rng);
      const double g_re = n01(rng);
      const double g_im = n01(rng);
      ray.gain = cdouble(g_re, g_im) * inv_sqrt2;
      ray.omega_r = spatial * std::sin(theta_r);
      ray.omega_t = spatial * std::sin(theta_t);
    }
  }
  return assemble_ray_channel(dims.n_r, dims.n_t, clusters);
}

MatrixXcd dft_matrix(Index n) {
  if (n <= 0) throw InvalidDimension("DFT size must be positive");
  MatrixXcd u(n, n);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      // reduce k*l mod n first so large sizes keep full phase accuracy
      const double phase = -kTwoPi * static_cast<double>((k * l) % n) / static_cast<double>(n);
      u(k, l) = std::polar(norm, phase);
    }
  }
  return u;
}

BeamspaceChannel to_beamspace(const MatrixXcd& h) {
  if (h.size() == 0) throw InvalidDimension("empty channel matrix");
  return {dft_matrix(h.rows()).adjoint() * h * dft_matrix(h.cols())};
}

MatrixXcd from_beamspace(const BeamspaceChannel& c) {
  if (c.c_matrix.size() == 0) throw InvalidDimension("empty beamspace matrix");
  const MatrixXcd& m = c.c_matrix;
  return dft_matrix(m.rows()) * m * dft_matrix(m.cols()).adjoint();
}

void write_channel_csv(std::ostream& os, const MatrixXcd& h) {
  char buf[64];
  for (Index r = 0; r < h.rows(); ++r) {
    for (Index c = 0; c < h.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%s%.17g,%.17g", c == 0 ? "" : ",", h(r, c).real(),
                    h(r, c).imag());
      os << buf;
    }
    os << '\n';
  }
}

MatrixXcd read_channel_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() % 2 != 0) throw InvalidDimension("channel CSV row has an odd value count");
    if (!rows.empty() && vals.size() != rows.front().size()) {
      throw InvalidDimension("channel CSV rows have different lengths");
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw InvalidDimension("channel CSV is empty");
  const Index n_rows = static_cast<Index>(rows.size());
  const Index n_cols = static_cast<Index>(rows.front().size() / 2);
  MatrixXcd h(n_rows, n_cols);
  for (Index r = 0; r < n_rows; ++r) {
    for (Index c = 0; c < n_cols; ++c) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      h(r, c) = cdouble(row[static_cast<std::size_t>(2 * c)],
                        row[static_cast<std::size_t>(2 * c + 1)]);
    }
  }
  return h;
}

}  // namespace onebit
