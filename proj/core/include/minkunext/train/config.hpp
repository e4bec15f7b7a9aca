#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "minkunext/autodiff/optim.hpp"
#include "minkunext/model/arch_config.hpp"
#include "minkunext/train/augment.hpp"
#include "minkunext/train/labels.hpp"
#include "minkunext/train/tsap.hpp"

namespace minkunext {

enum class Protocol { baseline, refined };

std::string_view to_string(Protocol p);
Protocol protocol_from_string(std::string_view s);

/// Regions whose training split feeds each protocol.
std::vector<std::string> protocol_train_regions(Protocol p);

struct TrainConfig {
  Protocol protocol = Protocol::baseline;
  /// Training regions; empty means the protocol's default regions.
  std::vector<std::string> train_regions;
  int epochs = 400;
  std::vector<int> milestones{250, 350};
  double initial_lr = 1e-3;
  double lr_factor = 0.1;
  double weight_decay = 1e-4;
  LossConfig loss;
  LabelConfig labels;
  AugmentConfig augment;
  std::vector<std::uint64_t> seeds{0};
  ArchConfig arch;
  /// Validation recall is computed every `eval_every` epochs and after the
  /// last one; 0 disables it.
  int eval_every = 10;
  std::size_t embed_chunk = 32;

  void validate() const;
  ad::LrSchedule schedule() const;
  std::vector<std::string> effective_train_regions() const;
};

TrainConfig baseline_train_config();
TrainConfig refined_train_config();
/// Batch 64, 50 epochs, channels divided by four, synthetic region.
TrainConfig desk_train_config();

std::string to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(std::string_view text);
TrainConfig load_train_config(const std::filesystem::path& path);

/// Learning rate used in every epoch of a run, without training.
std::vector<double> lr_sequence(const TrainConfig& cfg);

}  // namespace minkunext
