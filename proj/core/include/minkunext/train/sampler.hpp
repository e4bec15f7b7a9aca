#pragma once

#include <random>
#include <vector>

#include "minkunext/train/labels.hpp"
#include "minkunext/train/tsap.hpp"

namespace minkunext {

/// Splits one epoch into batches of at most `cfg.batch_size` record indices.
///
/// Anchors are visited in shuffled order; each anchor enters a batch with up
/// to min(k, its positive count) positives, unused ones first. A record is
/// never repeated inside a batch. The epoch ends once every record that has a
/// positive has appeared at least once. Throws "no query with any positive"
/// when no record qualifies.
std::vector<std::vector<std::size_t>> sample_epoch(const PairLabels& labels, const LossConfig& cfg,
                                                   std::mt19937_64& rng);

/// First batch of a freshly sampled epoch.
std::vector<std::size_t> sample_batch(const PairLabels& labels, const LossConfig& cfg,
                                      std::mt19937_64& rng);

}  // namespace minkunext
