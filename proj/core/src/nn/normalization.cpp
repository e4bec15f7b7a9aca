#include "minkunext/nn/normalization.hpp"

#include <cmath>
#include <stdexcept>

namespace minkunext::nn {

namespace {

template <typename T>
void check_affine(const Matrix<T>& x, const Matrix<T>& gamma, const Matrix<T>& beta) {
  if (gamma.rows() != 1 || gamma.cols() != x.cols() || !gamma.same_shape(beta))
    throw std::invalid_argument("normalization channel count mismatch");
}

}  // namespace

template <typename T>
Matrix<T> batch_norm_forward(const Matrix<T>& x, const Matrix<T>& gamma, const Matrix<T>& beta,
                             BatchNormState<T>& state, bool training, NormCache<T>* cache) {
  check_affine(x, gamma, beta);
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  if (state.running_mean.size() != c || state.running_var.size() != c)
    throw std::invalid_argument("normalization channel count mismatch");
  if (!(state.eps > 0.0)) throw std::invalid_argument("eps must be positive");

  std::vector<T> mean(c, T(0));
  std::vector<T> inv_std(c, T(0));
  if (training) {
    if (n < 2) throw std::invalid_argument("degenerate batch");
    std::vector<double> sum(c, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = 0; k < c; ++k) sum[k] += x(r, k);
    std::vector<double> mu(c), sq(c, 0.0);
    for (std::size_t k = 0; k < c; ++k) mu[k] = sum[k] / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = 0; k < c; ++k) {
        const double d = x(r, k) - mu[k];
        sq[k] += d * d;
      }
    for (std::size_t k = 0; k < c; ++k) {
      const double var = sq[k] / static_cast<double>(n);
      mean[k] = static_cast<T>(mu[k]);
      inv_std[k] = static_cast<T>(1.0 / std::sqrt(var + state.eps));
      const double unbiased = sq[k] / static_cast<double>(n - 1);
      state.running_mean[k] =
          static_cast<T>((1.0 - state.momentum) * state.running_mean[k] + state.momentum * mu[k]);
      state.running_var[k] =
          static_cast<T>((1.0 - state.momentum) * state.running_var[k] + state.momentum * unbiased);
    }
  } else {
    for (std::size_t k = 0; k < c; ++k) {
      if (state.running_var[k] < T(0)) throw std::invalid_argument("negative running variance");
      mean[k] = state.running_mean[k];
      inv_std[k] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(state.running_var[k]) + state.eps));
    }
  }

  Matrix<T> out(n, c);
  Matrix<T> normalized(cache ? n : 0, c);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < c; ++k) {
      const T xhat = (x(r, k) - mean[k]) * inv_std[k];
      if (cache) normalized(r, k) = xhat;
      out(r, k) = gamma.data()[k] * xhat + beta.data()[k];
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
    cache->batch_statistics = training;
  }
  return out;
}

template <typename T>
void batch_norm_backward(const NormCache<T>& cache, const Matrix<T>& gamma,
                         const Matrix<T>& grad_out, Matrix<T>* grad_x, Matrix<T>* grad_gamma,
                         Matrix<T>* grad_beta) {
  const Matrix<T>& xhat = cache.normalized;
  if (!xhat.same_shape(grad_out)) throw std::invalid_argument("upstream gradient shape mismatch");
  const std::size_t n = xhat.rows();
  const std::size_t c = xhat.cols();

  std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < c; ++k) {
      sum_g[k] += grad_out(r, k);
      sum_gx[k] += static_cast<double>(grad_out(r, k)) * xhat(r, k);
    }
  if (grad_gamma)
    for (std::size_t k = 0; k < c; ++k) grad_gamma->data()[k] += static_cast<T>(sum_gx[k]);
  if (grad_beta)
    for (std::size_t k = 0; k < c; ++k) grad_beta->data()[k] += static_cast<T>(sum_g[k]);
  if (!grad_x) return;

  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < c; ++k) {
      const double scale = static_cast<double>(gamma.data()[k]) * cache.inv_std[k];
      double g = grad_out(r, k);
      if (cache.batch_statistics) g -= (sum_g[k] + xhat(r, k) * sum_gx[k]) * inv_n;
      (*grad_x)(r, k) += static_cast<T>(scale * g);
    }
  }
}

template <typename T>
Matrix<T> layer_norm_forward(const Matrix<T>& x, const Matrix<T>& gamma, const Matrix<T>& beta,
                             double eps, NormCache<T>* cache) {
  check_affine(x, gamma, beta);
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  Matrix<T> out(n, c);
  Matrix<T> normalized(cache ? n : 0, c);
  std::vector<T> inv_std(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    double mu = 0.0;
    for (T v : row) mu += v;
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (T v : row) var += (v - mu) * (v - mu);
    var /= static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = static_cast<T>(is);
    for (std::size_t k = 0; k < c; ++k) {
      const T xhat = static_cast<T>((row[k] - mu) * is);
      if (cache) normalized(r, k) = xhat;
      out(r, k) = gamma.data()[k] * xhat + beta.data()[k];
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
    cache->batch_statistics = false;
  }
  return out;
}

template <typename T>
void layer_norm_backward(const NormCache<T>& cache, const Matrix<T>& gamma,
                         const Matrix<T>& grad_out, Matrix<T>* grad_x, Matrix<T>* grad_gamma,
                         Matrix<T>* grad_beta) {
  const Matrix<T>& xhat = cache.normalized;
  if (!xhat.same_shape(grad_out)) throw std::invalid_argument("upstream gradient shape mismatch");
  const std::size_t n = xhat.rows();
  const std::size_t c = xhat.cols();
  const double inv_c = 1.0 / static_cast<double>(c);
  for (std::size_t r = 0; r < n; ++r) {
    double sum_d = 0.0, sum_dx = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double d = static_cast<double>(grad_out(r, k)) * gamma.data()[k];
      sum_d += d;
      sum_dx += d * xhat(r, k);
      if (grad_gamma) grad_gamma->data()[k] += grad_out(r, k) * xhat(r, k);
      if (grad_beta) grad_beta->data()[k] += grad_out(r, k);
    }
    if (!grad_x) continue;
    for (std::size_t k = 0; k < c; ++k) {
      const double d = static_cast<double>(grad_out(r, k)) * gamma.data()[k];
      (*grad_x)(r, k) += static_cast<T>(cache.inv_std[r] * (d - (sum_d + xhat(r, k) * sum_dx) * inv_c));
    }
  }
}

#define MINKUNEXT_INSTANTIATE_NORM(T)                                                             \
  template Matrix<T> batch_norm_forward<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&,  \
                                           BatchNormState<T>&, bool, NormCache<T>*);              \
  template void batch_norm_backward<T>(const NormCache<T>&, const Matrix<T>&, const Matrix<T>&,   \
                                       Matrix<T>*, Matrix<T>*, Matrix<T>*);                       \
  template Matrix<T> layer_norm_forward<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&,  \
                                           double, NormCache<T>*);                                \
  template void layer_norm_backward<T>(const NormCache<T>&, const Matrix<T>&, const Matrix<T>&,   \
                                       Matrix<T>*, Matrix<T>*, Matrix<T>*);

MINKUNEXT_INSTANTIATE_NORM(float)
MINKUNEXT_INSTANTIATE_NORM(double)

}  // namespace minkunext::nn
