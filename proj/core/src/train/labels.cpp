#include "minkunext/train/labels.hpp"

#include <cmath>
#include <stdexcept>

namespace minkunext {

void LabelConfig::validate() const {
  if (!(positive_radius > 0.0) || !(positive_radius < negative_radius))
    throw std::invalid_argument("label radii must satisfy 0 < positive < negative");
  if (!(success_radius > 0.0)) throw std::invalid_argument("success radius must be positive");
}

Relation label_pair(const Utm& a, const Utm& b, const LabelConfig& cfg) {
  const double d = utm_distance(a, b);
  if (d <= cfg.positive_radius) return Relation::positive;
  if (d > cfg.negative_radius) return Relation::negative;
  return Relation::ignored;
}

PairLabels::PairLabels(std::span<const Utm> utms, const LabelConfig& cfg)
    : n_(utms.size()), rel_(utms.size() * utms.size(), Relation::ignored) {
  cfg.validate();
  for (std::size_t a = 0; a < n_; ++a) {
    if (!std::isfinite(utms[a].northing) || !std::isfinite(utms[a].easting))
      throw std::invalid_argument("non-finite UTM coordinate");
    for (std::size_t b = a + 1; b < n_; ++b) {
      const Relation r = label_pair(utms[a], utms[b], cfg);
      rel_[a * n_ + b] = r;
      rel_[b * n_ + a] = r;
    }
  }
}

std::vector<std::size_t> PairLabels::positives_of(std::size_t a) const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < n_; ++b)
    if (rel_[a * n_ + b] == Relation::positive) out.push_back(b);
  return out;
}

std::size_t PairLabels::positive_count(std::size_t a) const {
  std::size_t n = 0;
  for (std::size_t b = 0; b < n_; ++b) n += rel_[a * n_ + b] == Relation::positive;
  return n;
}

PairLabels PairLabels::subset(std::span<const std::size_t> rows) const {
  PairLabels out;
  out.n_ = rows.size();
  out.rel_.resize(out.n_ * out.n_);
  for (std::size_t i = 0; i < out.n_; ++i)
    for (std::size_t j = 0; j < out.n_; ++j)
      out.rel_[i * out.n_ + j] = i == j ? Relation::ignored : (*this)(rows[i], rows[j]);
  return out;
}

PairLabels PairLabels::from_relations(std::size_t n, std::vector<Relation> relations) {
  if (relations.size() != n * n) throw std::invalid_argument("relation table must be n x n");
  PairLabels out;
  out.n_ = n;
  out.rel_ = std::move(relations);
  return out;
}

PairLabels label_pairs(std::span<const SubmapRecord> records, const LabelConfig& cfg) {
  std::vector<Utm> utms;
  utms.reserve(records.size());
  for (const auto& r : records) utms.push_back(r.utm);
  return PairLabels(utms, cfg);
}

}  // namespace minkunext
