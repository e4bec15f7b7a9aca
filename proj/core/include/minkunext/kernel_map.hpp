#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "minkunext/coordinate_map.hpp"

namespace minkunext {

/// (input row, output row) pairs of one kernel offset. Pairs are sorted by
/// both in_rows and out_rows, and each row occurs at most once per offset.
struct OffsetPairs {
  std::vector<std::int32_t> in_rows;
  std::vector<std::int32_t> out_rows;

  std::size_t size() const noexcept { return in_rows.size(); }
};

/// Neighbour lists driving gather / matrix-multiply / scatter convolution.
/// Offset j enumerates (dx, dy, dz) lexicographically, j = (a * K + b) * K + c.
struct KernelMap {
  int kernel_size = 1;
  int stride = 1;
  bool transposed = false;
  std::size_t in_size = 0;
  std::size_t out_size = 0;
  std::vector<OffsetPairs> offsets;

  std::size_t volume() const noexcept { return offsets.size(); }
  std::size_t total_pairs() const noexcept;
};

using KernelMapPtr = std::shared_ptr<const KernelMap>;

/// Per-axis offsets (in units of the fine stride) of a kernel: centered
/// {-(K-1)/2 .. (K-1)/2} for odd K, {0 .. K-1} for even K.
std::vector<int> kernel_axis_offsets(int kernel_size);

/// Spatial offset of kernel index j, before multiplication by a stride.
std::array<int, 3> kernel_offset(int kernel_size, std::size_t j);

/// Builds the kernel map between two coordinate sets.
///
/// Regular convolution: the input lives at the fine stride and the output at
/// fine * s. For every output coordinate o and offset d (scaled by the input
/// stride) a pair is emitted when o + d is an input coordinate.
///
/// Transposed convolution: the input lives at the coarse stride and the output
/// at coarse / s. For every input coordinate c and offset d (scaled by the
/// output stride) a pair is emitted when c + d is an output coordinate, which
/// makes it the scatter-form adjoint of the regular map.
KernelMapPtr build_kernel_map(const CoordinateMap& in_map, const CoordinateMap& out_map,
                              int kernel_size, bool transposed);

}  // namespace minkunext
