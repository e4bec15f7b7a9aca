#include "minkunext/nn/elementwise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace minkunext::nn {

template <typename T>
Matrix<T> relu_forward(const Matrix<T>& x) {
  Matrix<T> out(x.rows(), x.cols());
  const T* in = x.data();
  T* o = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = in[i] > T(0) ? in[i] : T(0);
  return out;
}

template <typename T>
void relu_backward(const Matrix<T>& x, const Matrix<T>& grad_out, Matrix<T>& grad_x) {
  if (!x.same_shape(grad_out) || !x.same_shape(grad_x)) throw std::invalid_argument("relu shape mismatch");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x.data()[i] > T(0)) grad_x.data()[i] += grad_out.data()[i];
}

template <typename T>
T gelu(T x) {
  return x * T(0.5) * (T(1) + std::erf(x * (std::numbers::sqrt2_v<T> / T(2))));
}

template <typename T>
T gelu_derivative(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * (std::numbers::sqrt2_v<T> / T(2))));
  const T pdf = std::exp(T(-0.5) * x * x) * std::numbers::inv_sqrtpi_v<T> * (std::numbers::sqrt2_v<T> / T(2));
  return cdf + x * pdf;
}

template <typename T>
Matrix<T> gelu_forward(const Matrix<T>& x) {
  Matrix<T> out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = gelu(x.data()[i]);
  return out;
}

template <typename T>
void gelu_backward(const Matrix<T>& x, const Matrix<T>& grad_out, Matrix<T>& grad_x) {
  if (!x.same_shape(grad_out) || !x.same_shape(grad_x)) throw std::invalid_argument("gelu shape mismatch");
  for (std::size_t i = 0; i < x.size(); ++i)
    grad_x.data()[i] += grad_out.data()[i] * gelu_derivative(x.data()[i]);
}

template <typename T>
Matrix<T> concat_forward(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("coordinate-set mismatch");
  Matrix<T> out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

template <typename T>
void concat_backward(const Matrix<T>& grad_out, Matrix<T>* grad_a, Matrix<T>* grad_b) {
  const std::size_t ca = grad_a ? grad_a->cols() : grad_out.cols() - (grad_b ? grad_b->cols() : 0);
  for (std::size_t r = 0; r < grad_out.rows(); ++r) {
    const auto g = grad_out.row(r);
    if (grad_a)
      for (std::size_t k = 0; k < ca; ++k) (*grad_a)(r, k) += g[k];
    if (grad_b)
      for (std::size_t k = 0; k < grad_b->cols(); ++k) (*grad_b)(r, k) += g[ca + k];
  }
}

template <typename T>
SparseTensor<T> concat_channels(const SparseTensor<T>& a, const SparseTensor<T>& b) {
  if (!a.coords || !b.coords || !(a.coords == b.coords || a.coords->same_coords(*b.coords)))
    throw std::invalid_argument("coordinate-set mismatch");
  return SparseTensor<T>(a.coords, concat_forward(a.features, b.features));
}

#define MINKUNEXT_INSTANTIATE_ELEMENTWISE(T)                                                     \
  template Matrix<T> relu_forward<T>(const Matrix<T>&);                                          \
  template void relu_backward<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);                \
  template T gelu<T>(T);                                                                         \
  template T gelu_derivative<T>(T);                                                              \
  template Matrix<T> gelu_forward<T>(const Matrix<T>&);                                          \
  template void gelu_backward<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);                \
  template Matrix<T> concat_forward<T>(const Matrix<T>&, const Matrix<T>&);                      \
  template void concat_backward<T>(const Matrix<T>&, Matrix<T>*, Matrix<T>*);                    \
  template SparseTensor<T> concat_channels<T>(const SparseTensor<T>&, const SparseTensor<T>&);

MINKUNEXT_INSTANTIATE_ELEMENTWISE(float)
MINKUNEXT_INSTANTIATE_ELEMENTWISE(double)

}  // namespace minkunext::nn
