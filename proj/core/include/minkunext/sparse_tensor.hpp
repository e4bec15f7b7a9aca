#pragma once

#include <stdexcept>

#include "minkunext/coordinate_map.hpp"
#include "minkunext/matrix.hpp"

namespace minkunext {

/// Coordinates plus one feature row per coordinate.
template <typename T>
struct SparseTensor {
  CoordinateMapPtr coords;
  Matrix<T> features;

  SparseTensor() = default;
  SparseTensor(CoordinateMapPtr c, Matrix<T> f) : coords(std::move(c)), features(std::move(f)) {
    if (!coords) throw std::invalid_argument("sparse tensor without coordinates");
    if (features.rows() != coords->size())
      throw std::invalid_argument("feature rows do not match coordinate count");
  }

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t channels() const noexcept { return features.cols(); }
  int tensor_stride() const noexcept { return coords->tensor_stride(); }
};

/// Quantizes one cloud into a single-channel tensor of ones at stride 1.
template <typename T>
SparseTensor<T> quantize(const PointCloud& cloud, double qs, std::int32_t batch = 0);

}  // namespace minkunext
