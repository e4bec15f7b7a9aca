#pragma once

#include <cstdint>
#include <random>

#include "minkunext/train/dataset.hpp"

namespace minkunext {

struct SyntheticConfig {
  int places = 64;
  int variants = 10;
  int points = 4096;
  /// The last `test_variants` variants of every place form the test split.
  int test_variants = 2;
  /// Distance between neighbouring place centres on the UTM grid, in metres.
  double grid_spacing = 100.0;
  /// Variants lie within this distance of each other, in metres.
  double variant_spread = 10.0;
  int min_boxes = 3;
  int max_boxes = 7;
  int max_walls = 2;
  /// Crop-window translation between variants, in scene units.
  double window_shift = 0.05;
  /// Per-point uniform noise amplitude, in scene units.
  double jitter = 0.004;

  void validate() const;
};

/// Places are random arrangements of boxes and walls sampled on their
/// surfaces; variants re-crop, re-sample and jitter the same scene. Clouds
/// are centred and scaled so that every coordinate lies in [-1, 1]. Variant v
/// of place p is stored as synthetic/run_<v>/place_<p>.bin.
Dataset generate_synthetic(const SyntheticConfig& cfg, std::mt19937_64& rng);
Dataset generate_synthetic(int places, int variants, int points, std::mt19937_64& rng);

/// Shifts a cloud to zero mean and scales it by its largest absolute
/// coordinate. Throws "degenerate cloud" when all points coincide.
void normalize_cloud(PointCloud& cloud);

}  // namespace minkunext
