#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace minkunext::ad {

struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<float> data;
};

struct OptimizerSnapshot {
  std::uint64_t step = 0;
  double lr = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  std::vector<NamedTensor> first_moments;
  std::vector<NamedTensor> second_moments;
};

/// Contents of a checkpoint file; layout documented in docs/file_formats.md.
struct Checkpoint {
  std::string metadata;  // free-form text, the model stores its ArchConfig as JSON
  std::vector<NamedTensor> tensors;
  std::optional<OptimizerSnapshot> optimizer;

  const NamedTensor* find(const std::string& name) const;
};

inline constexpr char kCheckpointMagic[8] = {'M', 'N', 'X', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace minkunext::ad
