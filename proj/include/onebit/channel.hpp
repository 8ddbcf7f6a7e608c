#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "onebit/model.hpp"

namespace onebit {

/// H_ij ~ CN(0, 2 sigma_h^2): each real dimension has variance sigma_h^2.
struct GaussianChannelParams {
  double sigma_h_sq = 0.5;

  void validate() const;
};

/// Clustered ray model. Angles are drawn per cluster: a central AoA/AoD uniform on
/// [-pi/2, pi/2) plus Laplacian ray offsets whose standard deviation is the angle spread.
struct MmWaveChannelParams {
  Index n_clusters = 2;
  std::vector<Index> rays_per_cluster{15, 15};
  double angle_spread_deg = 10.0;
  double antenna_spacing_ratio = 0.5;  ///< d / lambda

  void validate() const;

  /// Same ray count in every cluster.
  static MmWaveChannelParams uniform(Index n_clusters, Index rays, double spread_deg,
                                     double spacing_ratio);
};

/// One propagation path, given by its spatial frequencies omega = 2 pi (d/lambda) sin(theta).
struct Ray {
  cdouble gain{1.0, 0.0};
  double omega_r = 0.0;
  double omega_t = 0.0;
};

struct BeamspaceChannel {
  MatrixXcd c_matrix;
};

MatrixXcd sample_gaussian_channel(const SystemDims& dims, const GaussianChannelParams& params,
                                  std::uint64_t seed);

MatrixXcd sample_mmwave_channel(const SystemDims& dims, const MmWaveChannelParams& params,
                                std::uint64_t seed);

/// H = (1/sqrt(N_c)) sum_n (1/sqrt(K_n)) sum_m gain a_{n_r}(omega_r) a_{n_t}^H(omega_t).
MatrixXcd assemble_ray_channel(Index n_r, Index n_t,
                               const std::vector<std::vector<Ray>>& clusters);

/// Unitary DFT matrix, U(k, l) = e^{-j 2 pi k l / n} / sqrt(n).
MatrixXcd dft_matrix(Index n);

/// C = U_{n_r}^H H U_{n_t}.
BeamspaceChannel to_beamspace(const MatrixXcd& h);
/// H = U_{n_r} C U_{n_t}^H.
MatrixXcd from_beamspace(const BeamspaceChannel& c);

/// Row-major CSV, one matrix row per line as re,im pairs.
void write_channel_csv(std::ostream& os, const MatrixXcd& h);
MatrixXcd read_channel_csv(std::istream& is);

}  // namespace onebit
