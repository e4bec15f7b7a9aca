#pragma once

#include "minkunext/matrix.hpp"

namespace minkunext::nn {

/// features (N x C_in) * weights (C_in x C_out) + bias (1 x C_out, optional).
template <typename T>
Matrix<T> linear_forward(const Matrix<T>& x, const Matrix<T>& weights, const Matrix<T>& bias);

template <typename T>
void linear_backward(const Matrix<T>& x, const Matrix<T>& weights, const Matrix<T>& grad_out,
                     Matrix<T>* grad_x, Matrix<T>* grad_weights, Matrix<T>* grad_bias);

}  // namespace minkunext::nn
