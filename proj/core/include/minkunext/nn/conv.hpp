#pragma once

#include "minkunext/kernel_map.hpp"
#include "minkunext/matrix.hpp"
#include "minkunext/sparse_tensor.hpp"

namespace minkunext::nn {

/// Kernel of a sparse (transposed) convolution. `weights` stacks one
/// C_in x C_out block per kernel offset, offset-major; `bias` is 1 x C_out or
/// empty.
template <typename T>
struct ConvParams {
  int kernel_size = 1;
  int stride = 1;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  Matrix<T> weights;
  Matrix<T> bias;

  ConvParams() = default;
  ConvParams(int k, int s, std::size_t c_in, std::size_t c_out, bool with_bias = false);

  std::size_t volume() const noexcept {
    const auto k = static_cast<std::size_t>(kernel_size);
    return k * k * k;
  }
  bool has_bias() const noexcept { return !bias.empty(); }
  /// Throws when shapes disagree with K, C_in, C_out or a weight is not finite.
  void validate() const;
};

/// Gather / matrix-multiply / scatter over a kernel map:
///   out[o] = sum_j sum_{(i, o) in kmap[j]} in[i] * W[j] + bias.
/// Accumulation runs offset-major, then in pair order, so results are
/// bitwise reproducible and independent of other rows.
template <typename T>
Matrix<T> conv_forward(const Matrix<T>& input, const Matrix<T>& weights, const Matrix<T>& bias,
                       const KernelMap& kmap);

/// Accumulates gradients of conv_forward into the non-null outputs, which
/// must already have the shapes of input / weights / bias.
template <typename T>
void conv_backward(const Matrix<T>& input, const Matrix<T>& weights, const KernelMap& kmap,
                   const Matrix<T>& grad_out, Matrix<T>* grad_input, Matrix<T>* grad_weights,
                   Matrix<T>* grad_bias);

/// Sparse convolution onto `out_coords` using a precomputed map.
template <typename T>
SparseTensor<T> sparse_conv(const SparseTensor<T>& input, const ConvParams<T>& params,
                            const KernelMap& kmap, CoordinateMapPtr out_coords);

/// Convenience form: derives the output coordinates (input coordinates for
/// stride 1, strided coordinates otherwise) and the kernel map.
template <typename T>
SparseTensor<T> sparse_conv(const SparseTensor<T>& input, const ConvParams<T>& params);

/// Transposed convolution scattering from coarse `input` onto the cached
/// finer coordinate set `out_coords`.
template <typename T>
SparseTensor<T> sparse_conv_transpose(const SparseTensor<T>& input, const ConvParams<T>& params,
                                      const KernelMap& kmap, CoordinateMapPtr out_coords);

template <typename T>
SparseTensor<T> sparse_conv_transpose(const SparseTensor<T>& input, const ConvParams<T>& params,
                                      CoordinateMapPtr out_coords);

}  // namespace minkunext::nn
