#include "minkunext/train/sampler.hpp"

#include <algorithm>
#include <stdexcept>

namespace minkunext {

std::vector<std::vector<std::size_t>> sample_epoch(const PairLabels& labels, const LossConfig& cfg,
                                                   std::mt19937_64& rng) {
  cfg.validate();
  const std::size_t n = labels.size();
  const auto b = static_cast<std::size_t>(cfg.batch_size);
  const auto k = static_cast<std::size_t>(cfg.k);

  std::vector<std::vector<std::size_t>> positives(n);
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < n; ++i) {
    positives[i] = labels.positives_of(i);
    if (!positives[i].empty()) anchors.push_back(i);
  }
  if (anchors.empty()) throw std::invalid_argument("no query with any positive");
  std::shuffle(anchors.begin(), anchors.end(), rng);

  std::vector<char> used(n, 0);
  std::size_t remaining = anchors.size();
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> batch;
  std::vector<char> in_batch(n, 0);
  auto take = [&](std::size_t i) {
    batch.push_back(i);
    in_batch[i] = 1;
    if (!used[i]) {
      used[i] = 1;
      --remaining;
    }
  };
  auto flush = [&] {
    for (std::size_t i : batch) in_batch[i] = 0;
    if (batch.size() >= 2) batches.push_back(std::move(batch));
    batch.clear();
  };

  std::size_t cursor = 0;
  while (remaining > 0) {
    while (cursor < anchors.size() && used[anchors[cursor]]) ++cursor;
    const std::size_t anchor = anchors[cursor];
    const std::size_t wanted = std::min(k, positives[anchor].size());
    if (b - batch.size() < 2) flush();

    std::vector<std::size_t> fresh;
    std::vector<std::size_t> reused;
    for (std::size_t p : positives[anchor]) {
      if (in_batch[p]) continue;
      (used[p] ? reused : fresh).push_back(p);
    }
    std::shuffle(fresh.begin(), fresh.end(), rng);
    std::shuffle(reused.begin(), reused.end(), rng);
    fresh.insert(fresh.end(), reused.begin(), reused.end());

    const std::size_t room = b - batch.size() - 1;
    const std::size_t count = std::min({wanted, fresh.size(), room});
    if (count < wanted && room < wanted && !batch.empty()) {
      flush();
      continue;
    }
    take(anchor);
    for (std::size_t i = 0; i < count; ++i) take(fresh[i]);
    if (batch.size() == b) flush();
  }
  flush();
  return batches;
}

std::vector<std::size_t> sample_batch(const PairLabels& labels, const LossConfig& cfg, std::mt19937_64& rng) {
  auto batches = sample_epoch(labels, cfg, rng);
  if (batches.empty()) throw std::invalid_argument("no query with any positive");
  return std::move(batches.front());
}

}  // namespace minkunext
