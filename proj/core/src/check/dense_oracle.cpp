#include "minkunext/check/dense_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "minkunext/nn/conv.hpp"

namespace minkunext::check {

template <typename T>
Matrix<T> dense_conv_reference(std::span<const VoxelCoord> coords, const Matrix<T>& features,
                               const Matrix<T>& weights, int kernel_size, int in_stride, int extent,
                               std::span<const VoxelCoord> out_coords) {
  const std::size_t c_in = features.cols();
  const std::size_t c_out = weights.cols();
  const int k = kernel_size;
  int batches = 0;
  for (const auto& c : coords) batches = std::max(batches, c.batch + 1);
  for (const auto& c : out_coords) batches = std::max(batches, c.batch + 1);

  const auto e = static_cast<std::size_t>(extent);
  std::vector<T> grid(static_cast<std::size_t>(batches) * e * e * e * c_in, T(0));
  auto cell = [&](int b, int x, int y, int z) {
    return ((static_cast<std::size_t>(b) * e + static_cast<std::size_t>(x)) * e + static_cast<std::size_t>(y)) * e +
           static_cast<std::size_t>(z);
  };
  for (std::size_t r = 0; r < coords.size(); ++r) {
    const auto& c = coords[r];
    if (c.x < 0 || c.y < 0 || c.z < 0 || c.x >= extent || c.y >= extent || c.z >= extent)
      throw std::out_of_range("coordinate outside the dense grid");
    std::copy(features.row(r).begin(), features.row(r).end(), grid.begin() + static_cast<std::ptrdiff_t>(cell(c.batch, c.x, c.y, c.z) * c_in));
  }

  const int lo = k % 2 == 1 ? -(k - 1) / 2 : 0;
  Matrix<T> out(out_coords.size(), c_out);
  for (std::size_t r = 0; r < out_coords.size(); ++r) {
    const auto& o = out_coords[r];
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        for (int c = 0; c < k; ++c) {
          const int x = o.x + (lo + a) * in_stride;
          const int y = o.y + (lo + b) * in_stride;
          const int z = o.z + (lo + c) * in_stride;
          if (x < 0 || y < 0 || z < 0 || x >= extent || y >= extent || z >= extent) continue;
          const T* f = grid.data() + cell(o.batch, x, y, z) * c_in;
          const std::size_t j = static_cast<std::size_t>((a * k + b) * k + c);
          for (std::size_t ci = 0; ci < c_in; ++ci)
            for (std::size_t co = 0; co < c_out; ++co) out(r, co) += f[ci] * weights(j * c_in + ci, co);
        }
  }
  return out;
}

std::vector<VoxelCoord> dense_output_coords(std::span<const VoxelCoord> coords, int in_stride, int stride) {
  const int s = in_stride * stride;
  std::set<VoxelCoord> out;
  for (const auto& c : coords) {
    auto down = [s](int v) { return static_cast<int>(std::floor(static_cast<double>(v) / s)) * s; };
    out.insert({c.batch, down(c.x), down(c.y), down(c.z)});
  }
  return {out.begin(), out.end()};
}

OracleReport run_dense_oracle(const OracleTrialConfig& cfg) {
  if (cfg.trials < 1 || cfg.max_grid < 1 || cfg.kernels.empty() || cfg.strides.empty())
    throw std::invalid_argument("invalid oracle configuration");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> grid_dist(std::min(2, cfg.max_grid), cfg.max_grid);
  std::uniform_int_distribution<int> chan_dist(1, cfg.max_channels);
  std::uniform_int_distribution<std::size_t> kernel_pick(0, cfg.kernels.size() - 1);
  std::uniform_int_distribution<std::size_t> stride_pick(0, cfg.strides.size() - 1);
  std::uniform_int_distribution<int> batch_dist(1, 2);
  std::uniform_real_distribution<double> occ_dist(cfg.min_occupancy, cfg.max_occupancy);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> value(-1.0, 1.0);

  OracleReport report;
  for (int t = 0; t < cfg.trials; ++t) {
    const int g = grid_dist(rng);
    const int k = cfg.kernels[kernel_pick(rng)];
    const int s = cfg.strides[stride_pick(rng)];
    const int batches = batch_dist(rng);
    const double occupancy = occ_dist(rng);
    const auto c_in = static_cast<std::size_t>(chan_dist(rng));
    const auto c_out = static_cast<std::size_t>(chan_dist(rng));

    std::vector<VoxelCoord> coords;
    for (int b = 0; b < batches; ++b)
      for (int x = 0; x < g; ++x)
        for (int y = 0; y < g; ++y)
          for (int z = 0; z < g; ++z)
            if (unit(rng) < occupancy) coords.push_back({b, x, y, z});
    if (coords.empty()) coords.push_back({0, g / 2, g / 2, g / 2});

    Matrix<double> feats(coords.size(), c_in);
    for (auto& v : feats.flat()) v = value(rng);
    nn::ConvParams<double> params(k, s, c_in, c_out, false);
    for (auto& v : params.weights.flat()) v = value(rng);

    const auto expected_coords = dense_output_coords(coords, 1, s);
    const auto expected = dense_conv_reference<double>(coords, feats, params.weights, k, 1, g, expected_coords);

    SparseTensor<double> input(build_coordinate_map(coords, 1), feats);
    const auto got = nn::sparse_conv(input, params);
    nn::ConvParams<float> params_f(k, s, c_in, c_out, false);
    params_f.weights = params.weights.cast<float>();
    SparseTensor<float> input_f(input.coords, feats.cast<float>());
    const auto got_f = nn::sparse_conv(input_f, params_f);

    std::ostringstream why;
    const auto got_coords = got.coords->coords();
    bool ok = std::equal(got_coords.begin(), got_coords.end(), expected_coords.begin(), expected_coords.end());
    if (!ok) why << "output coordinate set differs";
    double err_d = 0.0;
    double err_f = 0.0;
    if (ok) {
      for (std::size_t r = 0; r < expected.rows(); ++r)
        for (std::size_t c = 0; c < c_out; ++c) {
          const double ref = expected(r, c);
          const double denom = std::max(1.0, std::abs(ref));
          err_d = std::max(err_d, std::abs(got.features(r, c) - ref) / denom);
          err_f = std::max(err_f, std::abs(static_cast<double>(got_f.features(r, c)) - ref) / denom);
        }
      if (!(err_d <= cfg.tolerance_double)) {
        ok = false;
        why << "double error " << err_d;
      }
      if (!(err_f <= cfg.tolerance_float)) {
        ok = false;
        why << " float error " << err_f;
      }
    }
    report.max_error_double = std::max(report.max_error_double, err_d);
    report.max_error_float = std::max(report.max_error_float, err_f);
    ++report.trials;
    if (ok) {
      ++report.passed;
    } else {
      std::ostringstream msg;
      msg << "trial " << t << " (grid " << g << ", K " << k << ", s " << s << "): " << why.str();
      report.failures.push_back(msg.str());
    }
  }
  return report;
}

template Matrix<float> dense_conv_reference<float>(std::span<const VoxelCoord>, const Matrix<float>&,
                                                   const Matrix<float>&, int, int, int,
                                                   std::span<const VoxelCoord>);
template Matrix<double> dense_conv_reference<double>(std::span<const VoxelCoord>, const Matrix<double>&,
                                                     const Matrix<double>&, int, int, int,
                                                     std::span<const VoxelCoord>);

}  // namespace minkunext::check
