#pragma once

#include <memory>

#include "minkunext/model/layers.hpp"
#include "minkunext/sparse_tensor.hpp"

namespace minkunext {

/// Residual block of one of the three supported variants.
///
/// inverted_bottleneck (MinkNeXt): main stream widens C_in -> C_out with the
/// first conv, expands to 4 * C_out and reduces back to C_out; normalization
/// follows `block_norm_main`; no activation after the sum.
/// resnet / bottleneck: the classic blocks, with an activation after the sum.
/// The residual stream is the identity when C_in == C_out, otherwise a
/// 1x1x1 conv followed by batch norm.
template <typename T>
class ResidualBlock {
 public:
  ResidualBlock(std::string name, const ArchConfig& cfg, std::size_t c_in, std::size_t c_out,
                std::mt19937_64& rng);

  ad::VarId forward(ForwardContext<T>& ctx, ad::VarId x, const CoordinateMapPtr& coords);

  std::size_t in_channels() const noexcept { return c_in_; }
  std::size_t out_channels() const noexcept { return c_out_; }
  /// Width of the middle feature map of the main stream (4 * C_out for the
  /// inverted bottleneck, C_out / 4 for the bottleneck).
  std::size_t hidden_channels() const noexcept { return hidden_; }
  BlockVariant variant() const noexcept { return variant_; }
  bool has_projection() const noexcept { return proj_.has_value(); }

  std::vector<ConvLayer<T>>& convs() noexcept { return convs_; }
  std::vector<NormLayer<T>>& norms() noexcept { return norms_; }
  /// Residual-stream conv and batch norm, null when C_in == C_out.
  ConvLayer<T>* projection() noexcept { return proj_ ? &*proj_ : nullptr; }
  NormLayer<T>* projection_norm() noexcept { return proj_norm_ ? &*proj_norm_ : nullptr; }
  void collect_parameters(std::vector<ad::Parameter<T>*>& out);
  void collect_norms(std::vector<NormLayer<T>*>& out);

 private:
  BlockVariant variant_;
  Activation act_;
  BlockOrder order_;
  std::size_t c_in_;
  std::size_t c_out_;
  std::size_t hidden_;
  std::vector<ConvLayer<T>> convs_;
  std::vector<NormLayer<T>> norms_;
  std::optional<ConvLayer<T>> proj_;
  std::optional<NormLayer<T>> proj_norm_;
};

/// Runs one block on a standalone sparse tensor without recording gradients.
template <typename T>
SparseTensor<T> minknext_block_forward(const SparseTensor<T>& x, ResidualBlock<T>& block,
                                       bool training = false);

extern template class ResidualBlock<float>;
extern template class ResidualBlock<double>;

}  // namespace minkunext
