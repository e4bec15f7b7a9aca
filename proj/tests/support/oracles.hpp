#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <vector>

#include "minkunext/coordinate_map.hpp"
#include "minkunext/matrix.hpp"
#include "minkunext/train/labels.hpp"
#include "minkunext/voxel.hpp"

// Slow reference implementations used only by the tests. None of them calls
// into the library code path they are compared against.
namespace test_oracles {

using minkunext::Matrix;
using minkunext::VoxelCoord;

inline int floor_div_slow(int a, int b) { return static_cast<int>(std::floor(static_cast<double>(a) / b)); }

inline std::vector<VoxelCoord> brute_force_stride(const std::vector<VoxelCoord>& coords, int target) {
  std::set<VoxelCoord> out;
  for (const auto& c : coords)
    out.insert({c.batch, floor_div_slow(c.x, target) * target, floor_div_slow(c.y, target) * target,
                floor_div_slow(c.z, target) * target});
  return {out.begin(), out.end()};
}

inline std::vector<int> axis_offsets(int k) {
  std::vector<int> v;
  for (int i = 0; i < k; ++i) v.push_back(k % 2 == 1 ? i - (k - 1) / 2 : i);
  return v;
}

inline bool linear_contains(std::span<const VoxelCoord> coords, const VoxelCoord& c) {
  return std::find(coords.begin(), coords.end(), c) != coords.end();
}

/// Pairs of a regular convolution counted by a double loop over
/// (output coordinate, offset) with linear-scan membership.
inline std::size_t brute_force_pair_count(const minkunext::CoordinateMap& in, const minkunext::CoordinateMap& out,
                                          int k) {
  const int s = in.tensor_stride();
  const auto axis = axis_offsets(k);
  std::size_t n = 0;
  for (const auto& o : out.coords())
    for (int a : axis)
      for (int b : axis)
        for (int c : axis)
          if (linear_contains(in.coords(), {o.batch, o.x + a * s, o.y + b * s, o.z + c * s})) ++n;
  return n;
}

inline double sigmoid(double x, double tau) { return 1.0 / (1.0 + std::exp(-x / tau)); }

inline double euclid(const Matrix<double>& d, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t c = 0; c < d.cols(); ++c) s += (d(a, c) - d(b, c)) * (d(a, c) - d(b, c));
  return std::sqrt(s);
}

/// Untruncated Smooth-AP loss: every positive of a query enters P.
inline double smooth_ap_loss(const Matrix<double>& desc, const minkunext::PairLabels& labels, double tau) {
  using minkunext::Relation;
  const std::size_t n = desc.rows();
  double total = 0.0;
  int valid = 0;
  for (std::size_t q = 0; q < n; ++q) {
    std::vector<std::size_t> pos, all;
    for (std::size_t j = 0; j < n; ++j) {
      if (labels(q, j) == Relation::positive) pos.push_back(j);
      if (labels(q, j) != Relation::ignored) all.push_back(j);
    }
    if (pos.empty()) continue;
    double ap = 0.0;
    for (std::size_t i : pos) {
      const double di = euclid(desc, q, i);
      double num = 1.0, den = 1.0;
      for (std::size_t j : pos)
        if (j != i) num += sigmoid(di - euclid(desc, q, j), tau);
      for (std::size_t j : all)
        if (j != i) den += sigmoid(di - euclid(desc, q, j), tau);
      ap += num / den;
    }
    total += 1.0 - ap / static_cast<double>(pos.size());
    ++valid;
  }
  return total / valid;
}

/// Recall@N by the definition: per query, sort the whole database by
/// distance (ties by id), look at the first N, count hits among queries that
/// have any database entry within the success radius.
struct RecallCase {
  std::vector<std::vector<float>> db, queries;
  std::vector<std::pair<double, double>> db_utm, query_utm;
  std::vector<long long> db_ids;
};

inline double brute_force_recall(const RecallCase& c, std::size_t n, double radius) {
  auto utm_dist = [](std::pair<double, double> a, std::pair<double, double> b) {
    return std::hypot(a.first - b.first, a.second - b.second);
  };
  int answerable = 0, hits = 0;
  for (std::size_t q = 0; q < c.queries.size(); ++q) {
    bool any = false;
    for (std::size_t i = 0; i < c.db.size(); ++i) any = any || utm_dist(c.query_utm[q], c.db_utm[i]) <= radius;
    if (!any) continue;
    ++answerable;
    std::vector<std::pair<double, long long>> ranked;
    for (std::size_t i = 0; i < c.db.size(); ++i) {
      double s = 0.0;
      for (std::size_t d = 0; d < c.db[i].size(); ++d) {
        const double diff = static_cast<double>(c.queries[q][d]) - static_cast<double>(c.db[i][d]);
        s += diff * diff;
      }
      ranked.push_back({s, c.db_ids[i]});
    }
    std::vector<std::size_t> order(c.db.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ranked[a] < ranked[b]; });
    bool hit = false;
    for (std::size_t r = 0; r < std::min(n, order.size()); ++r)
      hit = hit || utm_dist(c.query_utm[q], c.db_utm[order[r]]) <= radius;
    hits += hit;
  }
  return answerable == 0 ? std::nan("") : static_cast<double>(hits) / answerable;
}

inline std::size_t one_percent_by_rounding(std::size_t m) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(m) / 100.0 + 0.5)));
}

/// Adam recurrence written out step by step on a scalar parameter.
struct ScalarAdam {
  double theta, m = 0.0, v = 0.0, lr, b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.0;
  int t = 0;
  void step(double g) {
    g += wd * theta;
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    theta -= lr * mhat / (std::sqrt(vhat) + eps);
  }
};

/// x * Phi(x) evaluated in long double.
inline long double gelu_long(long double x) { return x * 0.5L * (1.0L + std::erf(x / std::sqrt(2.0L))); }

}  // namespace test_oracles
