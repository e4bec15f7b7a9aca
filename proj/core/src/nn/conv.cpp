#include <algorithm>
#include "minkunext/nn/conv.hpp"

#include <cmath>
#include <stdexcept>

#include "minkunext/voxel.hpp"

namespace minkunext::nn {

template <typename T>
ConvParams<T>::ConvParams(int k, int s, std::size_t c_in, std::size_t c_out, bool with_bias)
    : kernel_size(k), stride(s), in_channels(c_in), out_channels(c_out) {
  if (k <= 0 || s <= 0) throw std::invalid_argument("kernel size and stride must be positive");
  weights = Matrix<T>(volume() * c_in, c_out);
  if (with_bias) bias = Matrix<T>(1, c_out);
}

template <typename T>
void ConvParams<T>::validate() const {
  if (kernel_size <= 0 || stride <= 0) throw std::invalid_argument("kernel size and stride must be positive");
  if (weights.rows() != volume() * in_channels || weights.cols() != out_channels)
    throw std::invalid_argument("convolution weight shape does not match K, C_in, C_out");
  if (!bias.empty() && (bias.rows() != 1 || bias.cols() != out_channels))
    throw std::invalid_argument("convolution bias shape mismatch");
  for (T w : weights.flat())
    if (!std::isfinite(w)) throw std::invalid_argument("non-finite convolution weight");
}

namespace {

template <typename T>
std::size_t checked_in_channels(const Matrix<T>& input, const Matrix<T>& weights,
                                const KernelMap& kmap) {
  const std::size_t volume = kmap.volume();
  if (volume == 0 || weights.rows() % volume != 0)
    throw std::invalid_argument("weights do not match the kernel volume");
  const std::size_t c_in = weights.rows() / volume;
  if (input.cols() != c_in) throw std::invalid_argument("channel mismatch");
  if (input.rows() != kmap.in_size)
    throw std::invalid_argument("kernel map was built for a different input");
  for (const auto& pairs : kmap.offsets) {
    if (pairs.in_rows.size() != pairs.out_rows.size())
      throw std::invalid_argument("corrupt kernel map");
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      if (pairs.in_rows[p] < 0 || static_cast<std::size_t>(pairs.in_rows[p]) >= kmap.in_size ||
          pairs.out_rows[p] < 0 || static_cast<std::size_t>(pairs.out_rows[p]) >= kmap.out_size)
        throw std::out_of_range("kernel map references out-of-range rows");
    }
  }
  return c_in;
}

}  // namespace

namespace {

// y[r][n0 + t] += sum_k x[r][k] * w[k * ldw + n0 + t] for R rows and a TILE-wide
// column block. Each row accumulates over k in order, independently of the
// other rows in the group.
template <typename T, int R, int TILE>
inline void row_tile(const T* const* x, T* const* y, const T* w, std::size_t ldw, std::size_t depth,
                     std::size_t n0) {
  T acc[R][TILE] = {};
  for (std::size_t k = 0; k < depth; ++k) {
    const T* wr = w + k * ldw + n0;
    for (int r = 0; r < R; ++r) {
      const T a = x[r][k];
      for (int t = 0; t < TILE; ++t) acc[r][t] = std::fma(a, wr[t], acc[r][t]);
    }
  }
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < TILE; ++t) y[r][n0 + t] += acc[r][t];
}

template <typename T, int R>
void rows_times_matrix(const T* const* x, T* const* y, const T* w, std::size_t depth, std::size_t width) {
  std::size_t n = 0;
  for (; n + 32 <= width; n += 32) row_tile<T, R, 32>(x, y, w, width, depth, n);
  for (; n + 16 <= width; n += 16) row_tile<T, R, 16>(x, y, w, width, depth, n);
  for (; n + 8 <= width; n += 8) row_tile<T, R, 8>(x, y, w, width, depth, n);
  for (; n < width; ++n) row_tile<T, R, 1>(x, y, w, width, depth, n);
}

// y[rows(p)] += x[cols(p)] * w over every pair; target rows are distinct.
template <typename T>
void gather_gemm_scatter(const T* x, std::size_t ldx, const std::vector<std::int32_t>& src, T* y,
                         std::size_t ldy, const std::vector<std::int32_t>& dst, const T* w,
                         std::size_t depth, std::size_t width) {
  const std::size_t n = src.size();
  std::size_t p = 0;
  if (width <= 16) {
    for (; p + 8 <= n; p += 8) {
      const T* xs[8];
      T* ys[8];
      for (int r = 0; r < 8; ++r) {
        xs[r] = x + static_cast<std::size_t>(src[p + r]) * ldx;
        ys[r] = y + static_cast<std::size_t>(dst[p + r]) * ldy;
      }
      rows_times_matrix<T, 8>(xs, ys, w, depth, width);
    }
  }
  for (; p + 4 <= n; p += 4) {
    const T* xs[4];
    T* ys[4];
    for (int r = 0; r < 4; ++r) {
      xs[r] = x + static_cast<std::size_t>(src[p + r]) * ldx;
      ys[r] = y + static_cast<std::size_t>(dst[p + r]) * ldy;
    }
    rows_times_matrix<T, 4>(xs, ys, w, depth, width);
  }
  for (; p < n; ++p) {
    const T* xs[1] = {x + static_cast<std::size_t>(src[p]) * ldx};
    T* ys[1] = {y + static_cast<std::size_t>(dst[p]) * ldy};
    rows_times_matrix<T, 1>(xs, ys, w, depth, width);
  }
}

}  // namespace

template <typename T>
Matrix<T> conv_forward(const Matrix<T>& input, const Matrix<T>& weights, const Matrix<T>& bias,
                       const KernelMap& kmap) {
  const std::size_t c_in = checked_in_channels(input, weights, kmap);
  const std::size_t c_out = weights.cols();
  if (!bias.empty() && bias.cols() != c_out) throw std::invalid_argument("bias shape mismatch");

  Matrix<T> out(kmap.out_size, c_out);
  for (std::size_t j = 0; j < kmap.volume(); ++j) {
    const auto& pairs = kmap.offsets[j];
    gather_gemm_scatter(input.data(), c_in, pairs.in_rows, out.data(), c_out, pairs.out_rows,
                        weights.data() + j * c_in * c_out, c_in, c_out);
  }
  if (!bias.empty()) {
    for (std::size_t r = 0; r < out.rows(); ++r) {
      T* y = out.data() + r * c_out;
      for (std::size_t co = 0; co < c_out; ++co) y[co] += bias.data()[co];
    }
  }
  return out;
}

template <typename T>
void conv_backward(const Matrix<T>& input, const Matrix<T>& weights, const KernelMap& kmap,
                   const Matrix<T>& grad_out, Matrix<T>* grad_input, Matrix<T>* grad_weights,
                   Matrix<T>* grad_bias) {
  const std::size_t c_in = checked_in_channels(input, weights, kmap);
  const std::size_t c_out = weights.cols();
  if (grad_out.rows() != kmap.out_size || grad_out.cols() != c_out)
    throw std::invalid_argument("upstream gradient shape mismatch");
  if (grad_input && !grad_input->same_shape(input)) throw std::invalid_argument("grad_input shape");
  if (grad_weights && !grad_weights->same_shape(weights))
    throw std::invalid_argument("grad_weights shape");

  std::vector<T> wt(c_in * c_out), ga, gg;
  for (std::size_t j = 0; j < kmap.volume(); ++j) {
    const auto& pairs = kmap.offsets[j];
    if (pairs.size() == 0) continue;
    const T* w = weights.data() + j * c_in * c_out;
    if (grad_input) {
      // W[j]^T laid out C_out x C_in keeps the inner loop contiguous.
      for (std::size_t ci = 0; ci < c_in; ++ci)
        for (std::size_t co = 0; co < c_out; ++co) wt[co * c_in + ci] = w[ci * c_out + co];
      gather_gemm_scatter(grad_out.data(), c_out, pairs.out_rows, grad_input->data(), c_in, pairs.in_rows,
                          wt.data(), c_out, c_in);
    }
    if (grad_weights) {
      // dW[j] = X_in^T G_out: input gathered channel-major, gradient row-major.
      const std::size_t n = pairs.size();
      ga.resize(n * c_in);
      gg.resize(n * c_out);
      for (std::size_t p = 0; p < n; ++p) {
        const T* x = input.data() + static_cast<std::size_t>(pairs.in_rows[p]) * c_in;
        for (std::size_t ci = 0; ci < c_in; ++ci) ga[ci * n + p] = x[ci];
        std::copy_n(grad_out.data() + static_cast<std::size_t>(pairs.out_rows[p]) * c_out, c_out,
                    gg.data() + p * c_out);
      }
      T* dw = grad_weights->data() + j * c_in * c_out;
      constexpr std::size_t chunk = 256;
      for (std::size_t p0 = 0; p0 < n; p0 += chunk) {
        const std::size_t depth = std::min(chunk, n - p0);
        const T* g = gg.data() + p0 * c_out;
        std::size_t ci = 0;
        if (c_out <= 16) {
          for (; ci + 8 <= c_in; ci += 8) {
            const T* xs[8];
            T* ys[8];
            for (int r = 0; r < 8; ++r) {
              xs[r] = ga.data() + (ci + r) * n + p0;
              ys[r] = dw + (ci + r) * c_out;
            }
            rows_times_matrix<T, 8>(xs, ys, g, depth, c_out);
          }
        }
        for (; ci + 4 <= c_in; ci += 4) {
          const T* xs[4];
          T* ys[4];
          for (int r = 0; r < 4; ++r) {
            xs[r] = ga.data() + (ci + r) * n + p0;
            ys[r] = dw + (ci + r) * c_out;
          }
          rows_times_matrix<T, 4>(xs, ys, g, depth, c_out);
        }
        for (; ci < c_in; ++ci) {
          const T* xs[1] = {ga.data() + ci * n + p0};
          T* ys[1] = {dw + ci * c_out};
          rows_times_matrix<T, 1>(xs, ys, g, depth, c_out);
        }
      }
    }
  }
  if (grad_bias) {
    if (grad_bias->rows() != 1 || grad_bias->cols() != c_out) throw std::invalid_argument("grad_bias shape");
    for (std::size_t r = 0; r < grad_out.rows(); ++r) {
      const T* g = grad_out.data() + r * c_out;
      for (std::size_t co = 0; co < c_out; ++co) grad_bias->data()[co] += g[co];
    }
  }
}

template <typename T>
SparseTensor<T> sparse_conv(const SparseTensor<T>& input, const ConvParams<T>& params,
                            const KernelMap& kmap, CoordinateMapPtr out_coords) {
  params.validate();
  if (kmap.transposed) throw std::invalid_argument("expected a regular kernel map");
  if (!out_coords || out_coords->size() != kmap.out_size)
    throw std::invalid_argument("output coordinates do not match the kernel map");
  if (input.channels() != params.in_channels) throw std::invalid_argument("channel mismatch");
  return SparseTensor<T>(std::move(out_coords),
                         conv_forward(input.features, params.weights, params.bias, kmap));
}

template <typename T>
SparseTensor<T> sparse_conv(const SparseTensor<T>& input, const ConvParams<T>& params) {
  const int in_stride = input.tensor_stride();
  CoordinateMapPtr out_coords = input.coords;
  if (params.stride != 1) {
    out_coords = build_coordinate_map(
        stride_coords(input.coords->coords(), in_stride, in_stride * params.stride),
        in_stride * params.stride);
  }
  const auto kmap = build_kernel_map(*input.coords, *out_coords, params.kernel_size, false);
  return sparse_conv(input, params, *kmap, std::move(out_coords));
}

template <typename T>
SparseTensor<T> sparse_conv_transpose(const SparseTensor<T>& input, const ConvParams<T>& params,
                                      const KernelMap& kmap, CoordinateMapPtr out_coords) {
  params.validate();
  if (!out_coords) throw std::invalid_argument("missing cached output coordinates");
  if (!kmap.transposed && params.stride != 1)
    throw std::invalid_argument("expected a transposed kernel map");
  if (out_coords->size() != kmap.out_size)
    throw std::invalid_argument("output coordinates do not match the kernel map");
  if (input.channels() != params.in_channels) throw std::invalid_argument("channel mismatch");
  return SparseTensor<T>(std::move(out_coords),
                         conv_forward(input.features, params.weights, params.bias, kmap));
}

template <typename T>
SparseTensor<T> sparse_conv_transpose(const SparseTensor<T>& input, const ConvParams<T>& params,
                                      CoordinateMapPtr out_coords) {
  if (!out_coords) throw std::invalid_argument("missing cached output coordinates");
  if (out_coords->tensor_stride() * params.stride != input.tensor_stride())
    throw std::invalid_argument("cached coordinates live at the wrong stride");
  const auto kmap = build_kernel_map(*input.coords, *out_coords, params.kernel_size, true);
  return sparse_conv_transpose(input, params, *kmap, std::move(out_coords));
}

#define MINKUNEXT_INSTANTIATE_CONV(T)                                                              \
  template struct ConvParams<T>;                                                                   \
  template Matrix<T> conv_forward<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&,         \
                                     const KernelMap&);                                            \
  template void conv_backward<T>(const Matrix<T>&, const Matrix<T>&, const KernelMap&,             \
                                 const Matrix<T>&, Matrix<T>*, Matrix<T>*, Matrix<T>*);            \
  template SparseTensor<T> sparse_conv<T>(const SparseTensor<T>&, const ConvParams<T>&,            \
                                          const KernelMap&, CoordinateMapPtr);                     \
  template SparseTensor<T> sparse_conv<T>(const SparseTensor<T>&, const ConvParams<T>&);           \
  template SparseTensor<T> sparse_conv_transpose<T>(const SparseTensor<T>&, const ConvParams<T>&,  \
                                                    const KernelMap&, CoordinateMapPtr);           \
  template SparseTensor<T> sparse_conv_transpose<T>(const SparseTensor<T>&, const ConvParams<T>&,  \
                                                    CoordinateMapPtr);

MINKUNEXT_INSTANTIATE_CONV(float)
MINKUNEXT_INSTANTIATE_CONV(double)

}  // namespace minkunext::nn
