#pragma once

#include <vector>

#include "minkunext/matrix.hpp"

namespace minkunext::nn {

/// Running statistics of a batch normalization layer. gamma / beta are
/// learnable and therefore live with the layer parameters.
template <typename T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNormState() = default;
  explicit BatchNormState(std::size_t channels, double momentum_ = 0.1, double eps_ = 1e-5)
      : running_mean(channels, T(0)), running_var(channels, T(1)), momentum(momentum_), eps(eps_) {}
};

/// Values saved by a normalization forward for its backward.
template <typename T>
struct NormCache {
  Matrix<T> normalized;     // (x - mean) * inv_std
  std::vector<T> inv_std;   // per channel (batch norm) or per row (layer norm)
  bool batch_statistics = true;
};

/// Per-channel normalization over all rows. Training mode uses batch
/// statistics and updates the running ones (unbiased variance); eval mode
/// uses the running statistics. Training with fewer than 2 rows throws
/// "degenerate batch".
template <typename T>
Matrix<T> batch_norm_forward(const Matrix<T>& x, const Matrix<T>& gamma, const Matrix<T>& beta,
                             BatchNormState<T>& state, bool training, NormCache<T>* cache = nullptr);

template <typename T>
void batch_norm_backward(const NormCache<T>& cache, const Matrix<T>& gamma,
                         const Matrix<T>& grad_out, Matrix<T>* grad_x, Matrix<T>* grad_gamma,
                         Matrix<T>* grad_beta);

/// Per-row normalization over channels followed by a per-channel affine map.
template <typename T>
Matrix<T> layer_norm_forward(const Matrix<T>& x, const Matrix<T>& gamma, const Matrix<T>& beta,
                             double eps, NormCache<T>* cache = nullptr);

template <typename T>
void layer_norm_backward(const NormCache<T>& cache, const Matrix<T>& gamma,
                         const Matrix<T>& grad_out, Matrix<T>* grad_x, Matrix<T>* grad_gamma,
                         Matrix<T>* grad_beta);

}  // namespace minkunext::nn
