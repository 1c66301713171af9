#pragma once

#include "qwnpol/poincare.hpp"

#include <cstdint>
#include <random>

namespace qwnpol {

using Rng = std::mt19937_64;

/// Independent, reproducible stream for (seed, stream) pairs. Trials in a
/// Monte-Carlo batch use their index as the stream so results do not depend
/// on scheduling.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

Eigen::Vector3d random_unit_vector(Rng& rng);

/// Haar-uniform rotation (normalized Gaussian quaternion).
PoincareRotation random_rotation(Rng& rng);

}  // namespace qwnpol
