#include "minkunext/model/ablation.hpp"

#include <stdexcept>

namespace minkunext {

namespace {

ArchConfig ablation_step_config_of(const std::vector<AblationStep>& steps, const std::string& id) {
  for (const auto& s : steps)
    if (s.id == id) return s.config;
  throw std::logic_error("ablation parent defined after its child: " + id);
}

std::vector<AblationStep> make_steps() {
  std::vector<AblationStep> steps;
  auto derive = [&](std::string id, std::string description, std::string parent, int direction,
                    auto&& edit) {
    ArchConfig cfg = ablation_step_config_of(steps, parent);
    edit(cfg);
    cfg.validate();
    steps.push_back({std::move(id), std::move(description), std::move(parent), cfg, direction});
  };

  ArchConfig base;
  base.decoder_channels = {128, 128, 96, 96};
  base.num_skips = 4;
  base.cardinalities = {2, 3, 4, 6, 2, 2, 2, 2};
  base.block_variant = BlockVariant::resnet;
  base.block_activation = Activation::relu;
  base.block_norm_main = NormKind::batch;
  base.block_kernel_sizes = {3, 3, 3};
  base.validate();
  steps.push_back({"G1.1", "MinkUNet34C starting point", "", base, 0});

  derive("G1.2", "cardinality 2 in every stage", "G1.1", -1,
         [](ArchConfig& c) { c.cardinalities.assign(8, 2); });
  derive("G1.3", "cardinality 1 in every stage", "G1.2", -1,
         [](ArchConfig& c) { c.cardinalities.assign(8, 1); });
  derive("G2.1", "decoder channels (128, 128, 128, 128)", "G1.3", +1,
         [](ArchConfig& c) { c.decoder_channels = {128, 128, 128, 128}; });
  derive("G2.2", "decoder channels (192, 192, 128, 128)", "G2.1", +1,
         [](ArchConfig& c) { c.decoder_channels = {192, 192, 128, 128}; });
  derive("G3.1", "2 skip connections", "G2.2", -1, [](ArchConfig& c) {
    c.num_skips = 2;
    c.decoder_channels = {192, 192};
    c.cardinalities.assign(6, 1);
  });
  derive("G3.2", "3 skip connections", "G2.2", -1, [](ArchConfig& c) {
    c.num_skips = 3;
    c.decoder_channels = {192, 192, 128};
    c.cardinalities.assign(7, 1);
  });
  derive("G4", "patchify stem, kernel 4 stride 4", "G3.2", -1, [](ArchConfig& c) {
    c.stem_kernel = 4;
    c.stem_stride = 4;
  });
  derive("R1", "bottleneck blocks", "G3.2", -1,
         [](ArchConfig& c) { c.block_variant = BlockVariant::bottleneck; });
  derive("R2", "inverted bottleneck blocks", "G3.2", +1,
         [](ArchConfig& c) { c.block_variant = BlockVariant::inverted_bottleneck; });
  derive("R3.1", "ResNet blocks with GeLU", "G3.2", 0,
         [](ArchConfig& c) { c.block_activation = Activation::gelu; });
  derive("R3.2", "inverted bottleneck with GeLU", "R2", 0,
         [](ArchConfig& c) { c.block_activation = Activation::gelu; });
  derive("R4", "layer norm in the block main stream", "R3.2", 0,
         [](ArchConfig& c) { c.block_norm_main = NormKind::layer; });
  derive("R5.1", "first block kernel 5", "R4", +1,
         [](ArchConfig& c) { c.block_kernel_sizes[0] = 5; });
  derive("R5.2", "first block kernel 7", "R4", +1,
         [](ArchConfig& c) { c.block_kernel_sizes[0] = 7; });
  derive("R5.3", "first block kernel 1 (final architecture)", "R4", -1,
         [](ArchConfig& c) { c.block_kernel_sizes[0] = 1; });
  return steps;
}

}  // namespace

const std::vector<AblationStep>& ablation_steps() {
  static const std::vector<AblationStep> steps = make_steps();
  return steps;
}

const AblationStep& ablation_step(std::string_view id) {
  for (const auto& s : ablation_steps())
    if (s.id == id) return s;
  throw std::invalid_argument("unknown ablation step " + std::string(id));
}

}  // namespace minkunext
