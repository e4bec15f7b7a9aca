#include "minkunext/nn/linear.hpp"

#include <stdexcept>

namespace minkunext::nn {

template <typename T>
Matrix<T> linear_forward(const Matrix<T>& x, const Matrix<T>& weights, const Matrix<T>& bias) {
  if (x.cols() != weights.rows()) throw std::invalid_argument("channel mismatch");
  const std::size_t c_in = weights.rows();
  const std::size_t c_out = weights.cols();
  if (!bias.empty() && (bias.rows() != 1 || bias.cols() != c_out))
    throw std::invalid_argument("bias shape mismatch");
  Matrix<T> out(x.rows(), c_out);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const T* xr = x.data() + r * c_in;
    T* y = out.data() + r * c_out;
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const T a = xr[ci];
      const T* w = weights.data() + ci * c_out;
      for (std::size_t co = 0; co < c_out; ++co) y[co] += a * w[co];
    }
    if (!bias.empty())
      for (std::size_t co = 0; co < c_out; ++co) y[co] += bias.data()[co];
  }
  return out;
}

template <typename T>
void linear_backward(const Matrix<T>& x, const Matrix<T>& weights, const Matrix<T>& grad_out,
                     Matrix<T>* grad_x, Matrix<T>* grad_weights, Matrix<T>* grad_bias) {
  const std::size_t c_in = weights.rows();
  const std::size_t c_out = weights.cols();
  if (grad_out.rows() != x.rows() || grad_out.cols() != c_out)
    throw std::invalid_argument("upstream gradient shape mismatch");
  std::vector<T> wt(c_in * c_out);
  for (std::size_t ci = 0; ci < c_in; ++ci)
    for (std::size_t co = 0; co < c_out; ++co) wt[co * c_in + ci] = weights(ci, co);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const T* g = grad_out.data() + r * c_out;
    if (grad_x) {
      T* dx = grad_x->data() + r * c_in;
      for (std::size_t co = 0; co < c_out; ++co) {
        const T a = g[co];
        const T* w = wt.data() + co * c_in;
        for (std::size_t ci = 0; ci < c_in; ++ci) dx[ci] += a * w[ci];
      }
    }
    if (grad_weights) {
      const T* xr = x.data() + r * c_in;
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const T a = xr[ci];
        T* dw = grad_weights->data() + ci * c_out;
        for (std::size_t co = 0; co < c_out; ++co) dw[co] += a * g[co];
      }
    }
    if (grad_bias)
      for (std::size_t co = 0; co < c_out; ++co) grad_bias->data()[co] += g[co];
  }
}

template Matrix<float> linear_forward<float>(const Matrix<float>&, const Matrix<float>&, const Matrix<float>&);
template Matrix<double> linear_forward<double>(const Matrix<double>&, const Matrix<double>&, const Matrix<double>&);
template void linear_backward<float>(const Matrix<float>&, const Matrix<float>&, const Matrix<float>&,
                                     Matrix<float>*, Matrix<float>*, Matrix<float>*);
template void linear_backward<double>(const Matrix<double>&, const Matrix<double>&, const Matrix<double>&,
                                      Matrix<double>*, Matrix<double>*, Matrix<double>*);

}  // namespace minkunext::nn
