#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "minkunext/train/dataset.hpp"

namespace minkunext {

struct LabelConfig {
  double positive_radius = 10.0;
  double negative_radius = 50.0;
  double success_radius = 25.0;

  void validate() const;
};

enum class Relation : std::uint8_t { ignored, positive, negative };

/// d <= positive_radius -> positive, d > negative_radius -> negative,
/// anything in between -> ignored.
Relation label_pair(const Utm& a, const Utm& b, const LabelConfig& cfg);

/// Symmetric relation matrix over a record set. The diagonal is ignored.
class PairLabels {
 public:
  PairLabels() = default;
  PairLabels(std::span<const Utm> utms, const LabelConfig& cfg);

  std::size_t size() const noexcept { return n_; }
  Relation operator()(std::size_t a, std::size_t b) const { return rel_[a * n_ + b]; }
  std::vector<std::size_t> positives_of(std::size_t a) const;
  std::size_t positive_count(std::size_t a) const;

  /// Relations restricted to `rows`, re-indexed by position.
  PairLabels subset(std::span<const std::size_t> rows) const;

  /// Builds labels directly from a relation table (row-major n x n).
  static PairLabels from_relations(std::size_t n, std::vector<Relation> relations);

 private:
  std::size_t n_ = 0;
  std::vector<Relation> rel_;
};

PairLabels label_pairs(std::span<const SubmapRecord> records, const LabelConfig& cfg);

}  // namespace minkunext
