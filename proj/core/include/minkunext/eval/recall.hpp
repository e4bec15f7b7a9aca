#pragma once

#include <span>
#include <string>
#include <vector>

#include "minkunext/eval/descriptor_db.hpp"
#include "minkunext/train/labels.hpp"

namespace minkunext {

struct Neighbor {
  std::int64_t id = 0;
  std::size_t row = 0;
  double distance = 0.0;
};

/// Exhaustive Euclidean search; ascending distance, ties broken by lower id.
std::vector<Neighbor> retrieve(std::span<const float> query, const DescriptorDB& db, std::size_t top_n);

/// Fraction of queries with a database entry within the success radius among
/// their top `n` results. Queries without any such entry in the database are
/// left out; returns NaN when none is left. Throws "empty database".
double recall_at(const DescriptorDB& db, const DescriptorDB& queries, std::size_t n, const LabelConfig& cfg);

/// max(1, round(M / 100)) with halves rounded up.
std::size_t one_percent_cutoff(std::size_t database_size) noexcept;

double recall_at_one_percent(const DescriptorDB& db, const DescriptorDB& queries, const LabelConfig& cfg);

struct RunPairRecall {
  std::string region;
  std::string database_run;
  std::string query_run;
  double recall_at_1 = 0.0;
  double recall_at_1pct = 0.0;
};

struct RegionRecall {
  std::string region;
  double ar_at_1 = 0.0;
  double ar_at_1pct = 0.0;
  std::size_t pairs = 0;
};

struct RecallReport {
  std::string protocol;
  std::vector<RunPairRecall> pairs;
  std::vector<RegionRecall> regions;
  double mean_ar_at_1 = 0.0;
  double mean_ar_at_1pct = 0.0;

  /// Region columns followed by Mean, one row per metric.
  std::string to_table() const;
  /// One line per run pair, then one per region, then the mean.
  std::string to_csv() const;
};

/// For every region, every ordered pair of distinct runs (database, queries)
/// is scored; pair recalls are averaged per region and regions averaged into
/// the mean. Pairs without any answerable query are skipped.
RecallReport evaluate_descriptors(const DescriptorDB& db, const LabelConfig& cfg, std::string protocol = "");

}  // namespace minkunext
