#include "minkunext/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "minkunext/sparse_tensor.hpp"

namespace minkunext {

namespace {

std::int32_t to_voxel_index(double v, double qs) {
  const double cell = std::floor(v / qs);
  if (cell < static_cast<double>(std::numeric_limits<std::int32_t>::min()) ||
      cell > static_cast<double>(std::numeric_limits<std::int32_t>::max())) {
    throw std::out_of_range("coordinate out of range");
  }
  return static_cast<std::int32_t>(cell);
}

}  // namespace

std::vector<VoxelCoord> quantize_coords(const PointCloud& cloud, double qs, std::int32_t batch) {
  if (!(qs > 0.0) || !std::isfinite(qs)) throw std::invalid_argument("quantization size must be positive");
  if (batch < 0) throw std::invalid_argument("batch index must be non-negative");
  if (cloud.empty()) throw std::invalid_argument("empty input");

  std::vector<VoxelCoord> coords;
  coords.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
      throw std::invalid_argument("invalid point");
    coords.push_back({batch, to_voxel_index(p[0], qs), to_voxel_index(p[1], qs),
                      to_voxel_index(p[2], qs)});
  }
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  return coords;
}

std::vector<VoxelCoord> stride_coords(std::span<const VoxelCoord> coords, int source_stride,
                                      int target_stride) {
  if (source_stride <= 0 || target_stride <= 0) throw std::invalid_argument("strides must be positive");
  if (target_stride % source_stride != 0)
    throw std::invalid_argument("target stride is not a multiple of the source stride");

  std::vector<VoxelCoord> out;
  out.reserve(coords.size());
  for (const auto& c : coords) {
    out.push_back({c.batch, floor_div(c.x, target_stride) * target_stride,
                   floor_div(c.y, target_stride) * target_stride,
                   floor_div(c.z, target_stride) * target_stride});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <typename T>
SparseTensor<T> quantize(const PointCloud& cloud, double qs, std::int32_t batch) {
  auto map = build_coordinate_map(quantize_coords(cloud, qs, batch), 1);
  Matrix<T> ones(map->size(), 1, T(1));
  return SparseTensor<T>(std::move(map), std::move(ones));
}

template SparseTensor<float> quantize<float>(const PointCloud&, double, std::int32_t);
template SparseTensor<double> quantize<double>(const PointCloud&, double, std::int32_t);

}  // namespace minkunext
