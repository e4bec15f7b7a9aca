#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "minkunext/matrix.hpp"
#include "minkunext/model/minkunext.hpp"
#include "minkunext/train/dataset.hpp"

namespace minkunext {

/// Immutable set of descriptors with their positions and provenance tags.
struct DescriptorDB {
  Matrix<float> descriptors;
  std::vector<Utm> utm;
  std::vector<std::int64_t> ids;
  std::vector<std::string> regions;
  std::vector<std::string> runs;

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t dim() const noexcept { return descriptors.cols(); }
  /// Throws when the per-row fields disagree in length.
  void validate() const;
  /// Rows `rows`, in the given order.
  DescriptorDB subset(std::span<const std::size_t> rows) const;
};

/// Eval-mode descriptors of `records`, rows ordered by record id.
DescriptorDB embed_dataset(MinkUNeXt<float>& model, std::span<const SubmapRecord> records,
                           std::size_t chunk = 32);

inline constexpr char kDescriptorMagic[8] = {'M', 'N', 'X', 'D', 'E', 'S', 'C', '\0'};
inline constexpr std::uint32_t kDescriptorVersion = 1;

void save_descriptor_db(const std::filesystem::path& path, const DescriptorDB& db);
DescriptorDB load_descriptor_db(const std::filesystem::path& path);

}  // namespace minkunext
