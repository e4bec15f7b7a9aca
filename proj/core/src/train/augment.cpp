#include "minkunext/train/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace minkunext {

void AugmentConfig::validate() const {
  if (!(jitter_max >= 0.0) || !(global_shift_max >= 0.0) || !(drop_fraction >= 0.0))
    throw std::invalid_argument("augmentation magnitudes must be non-negative");
  if (!(drop_fraction < 1.0)) throw std::invalid_argument("drop fraction must be < 1");
}

PointCloud augment(const PointCloud& cloud, const AugmentConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const std::size_t n = cloud.size();
  const auto drop = static_cast<std::size_t>(std::floor(cfg.drop_fraction * static_cast<double>(n)));

  PointCloud out;
  if (drop > 0) {
    out.points.reserve(n - drop);
    std::sample(cloud.points.begin(), cloud.points.end(), std::back_inserter(out.points), n - drop, rng);
  } else {
    out = cloud;
  }

  if (cfg.jitter_max > 0.0) {
    std::uniform_real_distribution<double> jitter(0.0, cfg.jitter_max);
    for (auto& p : out.points)
      for (double& c : p) c += jitter(rng);
  }
  if (cfg.global_shift_max > 0.0) {
    std::uniform_real_distribution<double> shift(0.0, cfg.global_shift_max);
    const Point3 t{shift(rng), shift(rng), shift(rng)};
    for (auto& p : out.points)
      for (std::size_t a = 0; a < 3; ++a) p[a] += t[a];
  }
  return out;
}

}  // namespace minkunext
