#pragma once

#include <random>

#include "minkunext/voxel.hpp"

namespace minkunext {

struct AugmentConfig {
  double jitter_max = 0.001;
  double global_shift_max = 0.01;
  double drop_fraction = 0.10;

  void validate() const;
};

/// Removes floor(drop_fraction * N) uniformly chosen points, adds per-point
/// per-axis jitter drawn from U[0, jitter_max] and one per-axis translation
/// drawn from U[0, global_shift_max]. Surviving points keep their order.
PointCloud augment(const PointCloud& cloud, const AugmentConfig& cfg, std::mt19937_64& rng);

}  // namespace minkunext
