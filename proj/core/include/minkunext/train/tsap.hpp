#pragma once

#include "minkunext/autodiff/tape.hpp"
#include "minkunext/train/labels.hpp"

namespace minkunext {

struct LossConfig {
  double tau = 0.01;
  /// Positives per query kept by the truncation.
  int k = 4;
  int batch_size = 2048;

  void validate() const;
};

/// Sigmoid G(x; tau) = 1 / (1 + exp(-x / tau)).
double smooth_rank_sigmoid(double x, double tau) noexcept;

template <typename T>
struct TsapResult {
  double loss = 0.0;
  std::size_t valid_queries = 0;
  /// d(loss) / d(descriptors), same shape as the descriptors.
  Matrix<T> grad;
};

/// Truncated Smooth-AP over a batch of descriptors. `labels` indexes batch
/// rows. For every query, P holds its k positives nearest in descriptor space
/// and the soft rank of each i in P is taken against P and against P plus all
/// negatives. Queries without positives are skipped; throws "no valid query"
/// when none remain.
template <typename T>
TsapResult<T> tsap_loss(const Matrix<T>& descriptors, const PairLabels& labels, const LossConfig& cfg);

namespace ad {
/// Records the loss as a 1 x 1 node.
template <typename T>
VarId tsap_loss(Tape<T>& tape, VarId descriptors, const PairLabels& labels, const LossConfig& cfg);
}  // namespace ad

}  // namespace minkunext
