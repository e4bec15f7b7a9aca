#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace minkunext {

enum class BlockVariant { resnet, bottleneck, inverted_bottleneck };
enum class Activation { relu, gelu };
enum class NormKind { batch, layer };

/// Layer order inside an inverted-bottleneck block.
///   convnext:      conv -> norm -> conv(expand) -> act -> conv(reduce) -> norm
///   norm_act_each: conv -> norm -> act -> conv(expand) -> norm -> act -> conv(reduce) -> norm
enum class BlockOrder { convnext, norm_act_each };

/// Structural description of the network, covering every design-progress
/// ablation axis.
struct ArchConfig {
  std::array<int, 4> encoder_channels{32, 64, 128, 256};
  std::vector<int> decoder_channels{192, 192, 128};
  int stem_kernel = 5;
  int stem_stride = 1;
  int num_skips = 3;
  /// 4 encoder stages followed by num_skips decoder stages.
  std::vector<int> cardinalities{1, 1, 1, 1, 1, 1, 1};
  BlockVariant block_variant = BlockVariant::inverted_bottleneck;
  Activation block_activation = Activation::gelu;
  NormKind block_norm_main = NormKind::layer;
  /// (first, hidden, last) kernel sizes of the block convolutions.
  std::array<int, 3> block_kernel_sizes{1, 3, 3};
  BlockOrder block_order = BlockOrder::convnext;
  int fc_dim = 512;
  double gem_p_init = 3.0;
  double gem_eps = 1e-6;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  double ln_eps = 1e-6;
  double quantization_size = 0.01;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
  int residual_block_count() const;
};

/// Width multiplier of the inverted bottleneck hidden layer.
inline constexpr int kInvertedBottleneckExpansion = 4;
/// Width divisor of the classic bottleneck hidden layer.
inline constexpr int kBottleneckReduction = 4;

std::string to_json(const ArchConfig& cfg);
ArchConfig arch_config_from_json(std::string_view text);
ArchConfig load_arch_config(const std::string& path);

/// Reduced-width network used for desk-scale experiments.
ArchConfig desk_arch_config();

/// Divides every channel width (encoder, decoder, fc) by `divisor`, keeping at
/// least one channel.
ArchConfig scale_channels(ArchConfig cfg, int divisor);

std::string_view to_string(BlockVariant v);
std::string_view to_string(Activation a);
std::string_view to_string(NormKind n);
std::string_view to_string(BlockOrder o);

}  // namespace minkunext
