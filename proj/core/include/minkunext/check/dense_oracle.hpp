#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "minkunext/matrix.hpp"
#include "minkunext/voxel.hpp"

namespace minkunext::check {

/// Reference convolution on a dense zero-filled grid. `coords` live at
/// `in_stride` inside [0, extent)^3 per batch; the result is evaluated at
/// `out_coords`. Weights use the (K^3 * C_in) x C_out layout with offsets
/// centred for odd K and starting at zero for even K.
template <typename T>
Matrix<T> dense_conv_reference(std::span<const VoxelCoord> coords, const Matrix<T>& features,
                               const Matrix<T>& weights, int kernel_size, int in_stride, int extent,
                               std::span<const VoxelCoord> out_coords);

/// Output coordinates of a stride-s convolution by brute-force floor division.
std::vector<VoxelCoord> dense_output_coords(std::span<const VoxelCoord> coords, int in_stride, int stride);

struct OracleTrialConfig {
  int trials = 200;
  int max_grid = 7;
  std::vector<int> kernels{1, 2, 3, 5};
  std::vector<int> strides{1, 2};
  double min_occupancy = 0.10;
  double max_occupancy = 0.90;
  int max_channels = 3;
  std::uint64_t seed = 0;
  double tolerance_double = 1e-10;
  double tolerance_float = 1e-5;
};

struct OracleReport {
  int trials = 0;
  int passed = 0;
  double max_error_double = 0.0;
  double max_error_float = 0.0;
  std::vector<std::string> failures;

  bool ok() const noexcept { return trials > 0 && passed == trials; }
};

/// Random sparse tensors compared against dense_conv_reference in double and
/// single precision. Errors are |sparse - dense| / max(1, |dense|).
OracleReport run_dense_oracle(const OracleTrialConfig& cfg);

}  // namespace minkunext::check
