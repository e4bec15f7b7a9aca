#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "minkunext/voxel.hpp"

namespace minkunext {

enum class Split { train, test };

struct Utm {
  double northing = 0.0;
  double easting = 0.0;
};

double utm_distance(const Utm& a, const Utm& b) noexcept;

/// One submap: a point cloud tagged with the UTM position of its centroid.
struct SubmapRecord {
  std::int64_t id = 0;
  PointCloud cloud;
  Utm utm;
  Split split = Split::train;
  std::string region;
  /// Traversal the submap belongs to (parent directory of its file).
  std::string run;
  /// Path relative to the dataset root.
  std::string path;
};

struct Dataset {
  std::vector<SubmapRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  /// Records of one split whose region is in `regions` (all regions if empty).
  std::vector<SubmapRecord> select(Split split, const std::vector<std::string>& regions = {}) const;
};

/// Reads a flat little-endian float64 xyz file. Throws "malformed submap"
/// when the size is not a multiple of 24 bytes.
PointCloud load_submap_bin(const std::filesystem::path& path);
void save_submap_bin(const std::filesystem::path& path, const PointCloud& cloud);

/// Loads `dir/index.csv` (columns relative_path, northing, easting, split,
/// region) and every submap it references. Ids follow row order.
Dataset load_dataset(const std::filesystem::path& dir);
/// Writes every record's cloud under `dir` and the matching index.csv.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

}  // namespace minkunext
