#pragma once

#include <cstdint>
#include <random>

#include "onebit/types.hpp"

namespace onebit {

using Rng = std::mt19937_64;

/// Mixes a base seed with a stream tag so that sub-streams are decorrelated.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Matrix of iid entries whose real and imaginary parts are each N(0, var_per_dim).
MatrixXcd complex_gaussian(Index rows, Index cols, double var_per_dim, Rng& rng);

}  // namespace onebit
