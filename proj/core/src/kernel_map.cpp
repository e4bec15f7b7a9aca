#include "minkunext/kernel_map.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace minkunext {

std::size_t KernelMap::total_pairs() const noexcept {
  return std::accumulate(offsets.begin(), offsets.end(), std::size_t{0},
                         [](std::size_t acc, const OffsetPairs& p) { return acc + p.size(); });
}

std::vector<int> kernel_axis_offsets(int kernel_size) {
  if (kernel_size <= 0) throw std::invalid_argument("kernel size must be positive");
  std::vector<int> axis(static_cast<std::size_t>(kernel_size));
  const int start = kernel_size % 2 == 1 ? -(kernel_size - 1) / 2 : 0;
  std::iota(axis.begin(), axis.end(), start);
  return axis;
}

std::array<int, 3> kernel_offset(int kernel_size, std::size_t j) {
  const auto axis = kernel_axis_offsets(kernel_size);
  const auto k = static_cast<std::size_t>(kernel_size);
  return {axis[j / (k * k)], axis[(j / k) % k], axis[j % k]};
}

namespace {

bool shifted(const VoxelCoord& c, const std::array<int, 3>& d, int scale, VoxelCoord& out) {
  const std::int64_t x = std::int64_t{c.x} + std::int64_t{d[0]} * scale;
  const std::int64_t y = std::int64_t{c.y} + std::int64_t{d[1]} * scale;
  const std::int64_t z = std::int64_t{c.z} + std::int64_t{d[2]} * scale;
  constexpr std::int64_t lo = std::numeric_limits<std::int32_t>::min();
  constexpr std::int64_t hi = std::numeric_limits<std::int32_t>::max();
  if (x < lo || x > hi || y < lo || y > hi || z < lo || z > hi) return false;
  out = {c.batch, static_cast<std::int32_t>(x), static_cast<std::int32_t>(y),
         static_cast<std::int32_t>(z)};
  return true;
}

}  // namespace

KernelMapPtr build_kernel_map(const CoordinateMap& in_map, const CoordinateMap& out_map,
                              int kernel_size, bool transposed) {
  const int fine = transposed ? out_map.tensor_stride() : in_map.tensor_stride();
  const int coarse = transposed ? in_map.tensor_stride() : out_map.tensor_stride();
  if (coarse % fine != 0)
    throw std::invalid_argument("inconsistent tensor strides for kernel map");

  auto kmap = std::make_shared<KernelMap>();
  kmap->kernel_size = kernel_size;
  kmap->stride = coarse / fine;
  kmap->transposed = transposed;
  kmap->in_size = in_map.size();
  kmap->out_size = out_map.size();

  const auto k = static_cast<std::size_t>(kernel_size);
  kmap->offsets.resize(k * k * k);
  // Both variants walk the "source" side of the relation in sorted order, so
  // the emitted pairs are sorted by in_row and out_row at the same time.
  const CoordinateMap& walk = transposed ? in_map : out_map;
  const CoordinateMap& probe = transposed ? out_map : in_map;
  for (std::size_t j = 0; j < kmap->offsets.size(); ++j) {
    const auto d = kernel_offset(kernel_size, j);
    auto& pairs = kmap->offsets[j];
    VoxelCoord target;
    for (std::size_t row = 0; row < walk.size(); ++row) {
      if (!shifted(walk.coords()[row], d, fine, target)) continue;
      const auto hit = probe.find(target);
      if (hit < 0) continue;
      const auto a = static_cast<std::int32_t>(row);
      const auto b = static_cast<std::int32_t>(hit);
      pairs.in_rows.push_back(transposed ? a : b);
      pairs.out_rows.push_back(transposed ? b : a);
    }
  }
  return kmap;
}

}  // namespace minkunext
