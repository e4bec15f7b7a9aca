#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "minkunext/autodiff/tape.hpp"
#include "minkunext/kernel_map.hpp"
#include "minkunext/model/arch_config.hpp"
#include "minkunext/nn/normalization.hpp"

namespace minkunext {

/// Convolution layer parameters. Transposed layers share the weight layout
/// (K^3 * C_in) x C_out.
template <typename T>
struct ConvLayer {
  int kernel_size = 1;
  int stride = 1;
  bool transposed = false;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  ad::Parameter<T> weight;
  std::optional<ad::Parameter<T>> bias;

  ConvLayer(std::string name, int k, int s, bool transposed, std::size_t c_in, std::size_t c_out,
            bool with_bias, std::mt19937_64& rng);
};

template <typename T>
struct NormLayer {
  NormKind kind = NormKind::batch;
  ad::Parameter<T> gamma;
  ad::Parameter<T> beta;
  nn::BatchNormState<T> state;  // unused by layer norm
  double ln_eps = 1e-6;

  NormLayer(std::string name, NormKind kind, std::size_t channels, const ArchConfig& cfg);
};

/// Fills `m` with Kaiming-uniform values for the given fan-in.
template <typename T>
void kaiming_uniform(Matrix<T>& m, std::size_t fan_in, std::mt19937_64& rng);

/// Builds kernel maps on demand and memoizes them for one forward pass.
class KernelMapCache {
 public:
  KernelMapPtr get(const CoordinateMapPtr& in, const CoordinateMapPtr& out, int kernel_size,
                   bool transposed);
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  struct Entry {
    const CoordinateMap* in;
    const CoordinateMap* out;
    int kernel_size;
    bool transposed;
    KernelMapPtr map;
  };
  std::vector<Entry> entries_;
};

/// Per-pass state shared by the layers of one forward.
template <typename T>
struct ForwardContext {
  ad::Tape<T>& tape;
  bool training;
  KernelMapCache kernel_maps;
};

template <typename T>
ad::VarId apply_conv(ForwardContext<T>& ctx, ConvLayer<T>& layer, ad::VarId x,
                     const CoordinateMapPtr& in, const CoordinateMapPtr& out);

template <typename T>
ad::VarId apply_norm(ForwardContext<T>& ctx, NormLayer<T>& layer, ad::VarId x);

template <typename T>
ad::VarId apply_activation(ForwardContext<T>& ctx, Activation act, ad::VarId x);

}  // namespace minkunext
