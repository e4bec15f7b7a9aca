#include "minkunext/coordinate_map.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <stdexcept>

namespace minkunext {

namespace {

constexpr std::uint64_t splitmix(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t CoordinateMap::hash(const VoxelCoord& c) noexcept {
  const auto lo = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x)) << 32) |
                  static_cast<std::uint32_t>(c.y);
  const auto hi = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.z)) << 32) |
                  static_cast<std::uint32_t>(c.batch);
  return splitmix(lo ^ splitmix(hi));
}

CoordinateMap::CoordinateMap(std::vector<VoxelCoord> coords, int tensor_stride)
    : coords_(std::move(coords)), stride_(tensor_stride) {
  if (stride_ <= 0) throw std::invalid_argument("tensor stride must be positive");
  if (coords_.size() >= static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
    throw std::length_error("too many coordinates");
  if (!std::is_sorted(coords_.begin(), coords_.end())) std::sort(coords_.begin(), coords_.end());
  if (std::adjacent_find(coords_.begin(), coords_.end()) != coords_.end())
    throw std::invalid_argument("duplicate coordinate");
  for (const auto& c : coords_) {
    if (c.batch < 0) throw std::invalid_argument("negative batch index");
    if (c.x % stride_ != 0 || c.y % stride_ != 0 || c.z % stride_ != 0)
      throw std::invalid_argument("coordinate is not a multiple of the tensor stride");
  }

  const std::size_t capacity = std::bit_ceil(std::max<std::size_t>(16, coords_.size() * 2));
  slots_.assign(capacity, -1);
  mask_ = capacity - 1;
  for (std::size_t row = 0; row < coords_.size(); ++row) {
    std::uint64_t slot = hash(coords_[row]) & mask_;
    while (slots_[slot] >= 0) slot = (slot + 1) & mask_;
    slots_[slot] = static_cast<std::int32_t>(row);
  }
}

std::int64_t CoordinateMap::find(const VoxelCoord& c) const noexcept {
  std::uint64_t slot = hash(c) & mask_;
  while (true) {
    const std::int32_t row = slots_[slot];
    if (row < 0) return -1;
    if (coords_[row] == c) return row;
    slot = (slot + 1) & mask_;
  }
}

std::vector<std::pair<std::size_t, std::size_t>> CoordinateMap::batch_segments(
    std::size_t num_batches) const {
  std::vector<std::pair<std::size_t, std::size_t>> segments(num_batches, {0, 0});
  std::size_t begin = 0;
  while (begin < coords_.size()) {
    const auto b = coords_[begin].batch;
    std::size_t end = begin;
    while (end < coords_.size() && coords_[end].batch == b) ++end;
    if (static_cast<std::size_t>(b) >= num_batches)
      throw std::out_of_range("batch index exceeds batch count");
    segments[static_cast<std::size_t>(b)] = {begin, end};
    begin = end;
  }
  return segments;
}

CoordinateMapPtr build_coordinate_map(std::vector<VoxelCoord> coords, int tensor_stride) {
  return std::make_shared<const CoordinateMap>(std::move(coords), tensor_stride);
}

}  // namespace minkunext
