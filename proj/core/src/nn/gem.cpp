#include "minkunext/nn/gem.hpp"

#include <cmath>
#include <stdexcept>

namespace minkunext::nn {

template <typename T>
Matrix<T> gem_forward(const Matrix<T>& x, const RowSegments& segments, T p, T eps) {
  if (!(p >= T(1))) throw std::invalid_argument("GeM exponent must be >= 1");
  if (!(eps > T(0))) throw std::invalid_argument("GeM eps must be positive");
  const std::size_t c = x.cols();
  Matrix<T> out(segments.size(), c);
  std::vector<double> acc(c);
  for (std::size_t b = 0; b < segments.size(); ++b) {
    const auto [begin, end] = segments[b];
    if (end <= begin || end > x.rows()) throw std::invalid_argument("empty descriptor set");
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t r = begin; r < end; ++r) {
      const T* xr = x.data() + r * c;
      for (std::size_t k = 0; k < c; ++k) acc[k] += std::pow(static_cast<double>(std::max(xr[k], eps)), double(p));
    }
    const double n = static_cast<double>(end - begin);
    for (std::size_t k = 0; k < c; ++k) out(b, k) = static_cast<T>(std::pow(acc[k] / n, 1.0 / double(p)));
  }
  return out;
}

template <typename T>
void gem_backward(const Matrix<T>& x, const RowSegments& segments, T p, T eps,
                  const Matrix<T>& out, const Matrix<T>& grad_out, Matrix<T>* grad_x, T* grad_p) {
  if (!out.same_shape(grad_out)) throw std::invalid_argument("upstream gradient shape mismatch");
  const std::size_t c = x.cols();
  const double pd = p;
  double dp = 0.0;
  std::vector<double> sum_pow(c), sum_pow_log(c);
  for (std::size_t b = 0; b < segments.size(); ++b) {
    const auto [begin, end] = segments[b];
    const double n = static_cast<double>(end - begin);
    std::fill(sum_pow.begin(), sum_pow.end(), 0.0);
    std::fill(sum_pow_log.begin(), sum_pow_log.end(), 0.0);
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t k = 0; k < c; ++k) {
        const double v = std::max(x(r, k), eps);
        const double vp = std::pow(v, pd);
        sum_pow[k] += vp;
        sum_pow_log[k] += vp * std::log(v);
      }
    }
    for (std::size_t k = 0; k < c; ++k) {
      const double y = out(b, k);
      const double g = grad_out(b, k);
      if (grad_x) {
        // dy/dx_n = y^(1-p) * x_n^(p-1) / N
        const double scale = g * std::pow(y, 1.0 - pd) / n;
        for (std::size_t r = begin; r < end; ++r) {
          const T v = x(r, k);
          if (v > eps) (*grad_x)(r, k) += static_cast<T>(scale * std::pow(static_cast<double>(v), pd - 1.0));
        }
      }
      const double mean = sum_pow[k] / n;
      dp += g * y * (-std::log(mean) / (pd * pd) + sum_pow_log[k] / (n * mean * pd));
    }
  }
  if (grad_p) *grad_p += static_cast<T>(dp);
}

template Matrix<float> gem_forward<float>(const Matrix<float>&, const RowSegments&, float, float);
template Matrix<double> gem_forward<double>(const Matrix<double>&, const RowSegments&, double, double);
template void gem_backward<float>(const Matrix<float>&, const RowSegments&, float, float,
                                  const Matrix<float>&, const Matrix<float>&, Matrix<float>*, float*);
template void gem_backward<double>(const Matrix<double>&, const RowSegments&, double, double,
                                   const Matrix<double>&, const Matrix<double>&, Matrix<double>*, double*);

}  // namespace minkunext::nn
