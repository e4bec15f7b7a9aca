#pragma once

#include "minkunext/matrix.hpp"
#include "minkunext/sparse_tensor.hpp"

namespace minkunext::nn {

template <typename T>
Matrix<T> relu_forward(const Matrix<T>& x);
/// grad_x += grad_out * [x > 0]
template <typename T>
void relu_backward(const Matrix<T>& x, const Matrix<T>& grad_out, Matrix<T>& grad_x);

/// x * Phi(x) with the exact (erf-based) normal CDF.
template <typename T>
Matrix<T> gelu_forward(const Matrix<T>& x);
template <typename T>
void gelu_backward(const Matrix<T>& x, const Matrix<T>& grad_out, Matrix<T>& grad_x);

template <typename T>
T gelu(T x);
template <typename T>
T gelu_derivative(T x);

/// Row-wise channel concatenation [a | b].
template <typename T>
Matrix<T> concat_forward(const Matrix<T>& a, const Matrix<T>& b);
template <typename T>
void concat_backward(const Matrix<T>& grad_out, Matrix<T>* grad_a, Matrix<T>* grad_b);

/// Skip fusion of two tensors on the same coordinate set; throws on a
/// coordinate-set mismatch.
template <typename T>
SparseTensor<T> concat_channels(const SparseTensor<T>& a, const SparseTensor<T>& b);

}  // namespace minkunext::nn
