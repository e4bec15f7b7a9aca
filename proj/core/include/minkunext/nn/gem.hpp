#pragma once

#include <utility>
#include <vector>

#include "minkunext/matrix.hpp"

namespace minkunext::nn {

using RowSegments = std::vector<std::pair<std::size_t, std::size_t>>;

/// Generalized mean over the rows of each segment:
///   out[b, c] = (mean_n max(x[n, c], eps)^p)^(1/p).
/// Throws "empty descriptor set" for an empty segment.
template <typename T>
Matrix<T> gem_forward(const Matrix<T>& x, const RowSegments& segments, T p, T eps);

template <typename T>
void gem_backward(const Matrix<T>& x, const RowSegments& segments, T p, T eps,
                  const Matrix<T>& out, const Matrix<T>& grad_out, Matrix<T>* grad_x, T* grad_p);

}  // namespace minkunext::nn
