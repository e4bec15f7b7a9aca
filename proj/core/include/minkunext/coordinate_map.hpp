#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "minkunext/voxel.hpp"

namespace minkunext {

/// Bijection between a sorted, duplicate-free coordinate set and row indices.
///
/// Lookups go through an open-addressing (linear probing) table keyed on the
/// full (batch, x, y, z) tuple. Iteration is always in sorted coordinate
/// order; hash order is never observable.
class CoordinateMap {
 public:
  /// Sorts `coords` and indexes them. Throws on duplicates, on a non-positive
  /// stride and on coordinates that are not multiples of `tensor_stride`.
  CoordinateMap(std::vector<VoxelCoord> coords, int tensor_stride);

  std::size_t size() const noexcept { return coords_.size(); }
  int tensor_stride() const noexcept { return stride_; }
  std::span<const VoxelCoord> coords() const noexcept { return coords_; }
  const VoxelCoord& coord(std::size_t row) const { return coords_.at(row); }

  /// Row of `c`, or -1 if absent.
  std::int64_t find(const VoxelCoord& c) const noexcept;
  bool contains(const VoxelCoord& c) const noexcept { return find(c) >= 0; }

  /// Contiguous row ranges [begin, end) per batch index, indexed by batch id.
  /// Batch ids absent from the map get an empty range.
  std::vector<std::pair<std::size_t, std::size_t>> batch_segments(std::size_t num_batches) const;

  bool same_coords(const CoordinateMap& other) const noexcept {
    return stride_ == other.stride_ && coords_ == other.coords_;
  }

 private:
  static std::uint64_t hash(const VoxelCoord& c) noexcept;

  std::vector<VoxelCoord> coords_;
  std::vector<std::int32_t> slots_;  // row index or -1
  std::uint64_t mask_ = 0;
  int stride_ = 1;
};

using CoordinateMapPtr = std::shared_ptr<const CoordinateMap>;

/// Builds the map for an arbitrary (possibly unsorted) coordinate list.
CoordinateMapPtr build_coordinate_map(std::vector<VoxelCoord> coords, int tensor_stride = 1);

}  // namespace minkunext
