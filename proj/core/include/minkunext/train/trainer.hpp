#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "minkunext/model/minkunext.hpp"
#include "minkunext/train/config.hpp"
#include "minkunext/train/dataset.hpp"

namespace minkunext {

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  /// NaN on epochs without validation.
  double val_ar_at_1 = 0.0;
};

struct TrainOptions {
  /// Metrics are appended as "epoch,lr,loss,val_AR@1" lines.
  std::optional<std::filesystem::path> metrics_log;
  /// Model and optimizer state written after the last epoch.
  std::optional<std::filesystem::path> checkpoint;
  std::function<void(const EpochMetrics&)> on_epoch;
  /// Stops after this many epochs while keeping the configured schedule.
  std::optional<int> max_epochs;
};

struct TrainResult {
  MinkUNeXt<float> model;
  std::vector<EpochMetrics> history;
};

/// Epoch loop of sample, augment, forward, TSAP loss, backward and Adam step
/// on the training split of the configured regions; validation recall is
/// measured on the test split of the same regions. Throws std::runtime_error
/// naming the epoch and batch when the loss stops being finite.
TrainResult train(const TrainConfig& cfg, const Dataset& data, std::uint64_t seed,
                  const TrainOptions& options = {});

}  // namespace minkunext
