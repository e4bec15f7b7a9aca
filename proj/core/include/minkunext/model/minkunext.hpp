#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "minkunext/autodiff/checkpoint.hpp"
#include "minkunext/model/blocks.hpp"
#include "minkunext/voxel.hpp"

namespace minkunext {

/// U-Net of sparse convolutions with residual blocks, a per-voxel fully
/// connected expansion and GeM pooling into one descriptor per cloud.
///
/// Stem (conv + BN + ReLU), four stride-2 encoder stages of
/// [conv k=2 s=2, BN, ReLU, blocks], num_skips decoder stages of
/// [transposed conv k=2 s=2, BN, ReLU, concat skip, blocks], FC, GeM.
/// Decoder stage d fuses the encoder output whose stride matches its own
/// output (strides 8, 4, 2, 1 for d = 0..3 with the default stem).
template <typename T>
class MinkUNeXt {
 public:
  MinkUNeXt(const ArchConfig& cfg, std::uint64_t seed);

  const ArchConfig& config() const noexcept { return cfg_; }

  /// Quantizes every cloud (batch index = position), runs the network and
  /// returns the (B x fc_dim) descriptor node. Descriptors are not normalized.
  ad::VarId forward(ad::Tape<T>& tape, std::span<const PointCloud> clouds, bool training);

  /// Eval-mode descriptors without recording gradients, `chunk` clouds at a time.
  Matrix<T> embed(std::span<const PointCloud> clouds, std::size_t chunk = 32);

  std::vector<ad::Parameter<T>*> parameters();
  std::size_t parameter_count() const;
  void zero_grad();
  /// Keeps the GeM exponent inside its domain (p >= 1) after an update.
  void clamp_parameters();

  std::size_t residual_block_count() const noexcept;
  std::size_t skip_fusion_count() const noexcept { return decoder_.size(); }
  std::vector<ResidualBlock<T>*> blocks();
  int output_stride() const noexcept;

  /// Coordinate maps of the last forward: stem output then each encoder stage.
  const std::vector<CoordinateMapPtr>& encoder_coordinates() const noexcept { return encoder_maps_; }
  /// Output coordinate map of each decoder stage of the last forward.
  const std::vector<CoordinateMapPtr>& decoder_coordinates() const noexcept { return decoder_maps_; }

  /// Parameters and batch-norm running statistics as named float tensors.
  std::vector<ad::NamedTensor> state_dict();
  void load_state_dict(const std::vector<ad::NamedTensor>& tensors);

  ad::Checkpoint to_checkpoint();
  static MinkUNeXt from_checkpoint(const ad::Checkpoint& ckpt);

 private:
  struct EncoderStage {
    ConvLayer<T> down;
    NormLayer<T> norm;
    std::vector<std::unique_ptr<ResidualBlock<T>>> blocks;
  };
  struct DecoderStage {
    ConvLayer<T> up;
    NormLayer<T> norm;
    std::vector<std::unique_ptr<ResidualBlock<T>>> blocks;
  };

  void collect_norms(std::vector<NormLayer<T>*>& out);

  ArchConfig cfg_;
  std::unique_ptr<ConvLayer<T>> stem_;
  std::unique_ptr<NormLayer<T>> stem_norm_;
  std::vector<std::unique_ptr<EncoderStage>> encoder_;
  std::vector<std::unique_ptr<DecoderStage>> decoder_;
  std::unique_ptr<ad::Parameter<T>> fc_weight_;
  std::unique_ptr<ad::Parameter<T>> fc_bias_;
  std::unique_ptr<ad::Parameter<T>> gem_p_;

  std::vector<CoordinateMapPtr> encoder_maps_;
  std::vector<CoordinateMapPtr> decoder_maps_;
};

extern template class MinkUNeXt<float>;
extern template class MinkUNeXt<double>;

}  // namespace minkunext
