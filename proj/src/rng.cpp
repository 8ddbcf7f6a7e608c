#include "onebit/rng.hpp"

namespace onebit {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer over a combination of the two words
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

MatrixXcd complex_gaussian(Index rows, Index cols, double var_per_dim, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const double sd = std::sqrt(var_per_dim);
  MatrixXcd out(rows, cols);
  // column-major fill so a prefix of columns is stable when cols grows
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) {
      const double re = n01(rng);
      const double im = n01(rng);
      out(r, c) = cdouble(sd * re, sd * im);
    }
  }
  return out;
}

}  // namespace onebit
