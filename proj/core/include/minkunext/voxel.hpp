#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <vector>

namespace minkunext {

using Point3 = std::array<double, 3>;

/// Unordered set of 3D points, nominally normalized to [-1, 1] per axis.
/// Duplicates are allowed; quantization removes them.
struct PointCloud {
  std::vector<Point3> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
};

/// Integer voxel coordinate of one batch element. At tensor stride s the
/// spatial components are multiples of s.
struct VoxelCoord {
  std::int32_t batch = 0;
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  friend auto operator<=>(const VoxelCoord&, const VoxelCoord&) = default;
};

/// Voxel coordinates of a cloud: unique floor(p / qs) triples tagged with
/// `batch`, sorted. Throws "empty input" for an empty cloud, "invalid point"
/// for non-finite coordinates and "coordinate out of range" when a voxel index
/// does not fit in 32 bits.
std::vector<VoxelCoord> quantize_coords(const PointCloud& cloud, double qs, std::int32_t batch);

/// Maps coordinates living at `source_stride` onto the `target_stride` grid
/// (floor division, then re-multiplied). The result is sorted and unique.
std::vector<VoxelCoord> stride_coords(std::span<const VoxelCoord> coords, int source_stride,
                                      int target_stride);

/// Floor division that rounds toward negative infinity.
constexpr std::int32_t floor_div(std::int32_t a, std::int32_t b) noexcept {
  const std::int32_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

}  // namespace minkunext
