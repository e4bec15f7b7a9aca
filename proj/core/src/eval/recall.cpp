#include "minkunext/eval/recall.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace minkunext {

std::vector<Neighbor> retrieve(std::span<const float> query, const DescriptorDB& db, std::size_t top_n) {
  if (db.size() == 0) throw std::invalid_argument("empty database");
  if (query.size() != db.dim()) throw std::invalid_argument("query dimension mismatch");
  std::vector<Neighbor> all(db.size());
  for (std::size_t r = 0; r < db.size(); ++r) {
    const auto row = db.descriptors.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double d = static_cast<double>(query[c]) - static_cast<double>(row[c]);
      s += d * d;
    }
    all[r] = {db.ids[r], r, std::sqrt(s)};
  }
  auto before = [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  };
  top_n = std::min(top_n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(top_n), all.end(), before);
  all.resize(top_n);
  return all;
}

double recall_at(const DescriptorDB& db, const DescriptorDB& queries, std::size_t n, const LabelConfig& cfg) {
  if (db.size() == 0) throw std::invalid_argument("empty database");
  if (n == 0) throw std::invalid_argument("N must be >= 1");
  std::size_t answerable = 0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const Utm& pos = queries.utm[q];
    const bool has_match = std::any_of(db.utm.begin(), db.utm.end(), [&](const Utm& u) {
      return utm_distance(u, pos) <= cfg.success_radius;
    });
    if (!has_match) continue;
    ++answerable;
    for (const auto& nb : retrieve(queries.descriptors.row(q), db, n)) {
      if (utm_distance(db.utm[nb.row], pos) <= cfg.success_radius) {
        ++hits;
        break;
      }
    }
  }
  if (answerable == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(hits) / static_cast<double>(answerable);
}

std::size_t one_percent_cutoff(std::size_t database_size) noexcept {
  return std::max<std::size_t>(1, (database_size + 50) / 100);
}

double recall_at_one_percent(const DescriptorDB& db, const DescriptorDB& queries, const LabelConfig& cfg) {
  return recall_at(db, queries, one_percent_cutoff(db.size()), cfg);
}

RecallReport evaluate_descriptors(const DescriptorDB& db, const LabelConfig& cfg, std::string protocol) {
  db.validate();
  if (db.size() == 0) throw std::invalid_argument("empty database");
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < db.size(); ++i) groups[db.regions[i]][db.runs[i]].push_back(i);

  RecallReport report;
  report.protocol = std::move(protocol);
  for (const auto& [region, runs] : groups) {
    RegionRecall rr{region, 0.0, 0.0, 0};
    for (const auto& [db_run, db_rows] : runs) {
      const DescriptorDB database = db.subset(db_rows);
      for (const auto& [q_run, q_rows] : runs) {
        if (q_run == db_run) continue;
        const DescriptorDB queries = db.subset(q_rows);
        const double r1 = recall_at(database, queries, 1, cfg);
        if (std::isnan(r1)) continue;
        const double r1p = recall_at_one_percent(database, queries, cfg);
        report.pairs.push_back({region, db_run, q_run, r1, r1p});
        rr.ar_at_1 += r1;
        rr.ar_at_1pct += r1p;
        ++rr.pairs;
      }
    }
    if (rr.pairs == 0) continue;
    rr.ar_at_1 /= static_cast<double>(rr.pairs);
    rr.ar_at_1pct /= static_cast<double>(rr.pairs);
    report.regions.push_back(rr);
  }
  if (report.regions.empty()) throw std::invalid_argument("no run pair with answerable queries");
  for (const auto& r : report.regions) {
    report.mean_ar_at_1 += r.ar_at_1;
    report.mean_ar_at_1pct += r.ar_at_1pct;
  }
  report.mean_ar_at_1 /= static_cast<double>(report.regions.size());
  report.mean_ar_at_1pct /= static_cast<double>(report.regions.size());
  return report;
}

std::string RecallReport::to_table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  if (!protocol.empty()) os << "protocol: " << protocol << '\n';
  os << std::left << std::setw(10) << "metric";
  for (const auto& r : regions) os << std::right << std::setw(12) << r.region;
  os << std::right << std::setw(12) << "Mean" << '\n';
  os << std::left << std::setw(10) << "AR@1";
  for (const auto& r : regions) os << std::right << std::setw(12) << 100.0 * r.ar_at_1;
  os << std::right << std::setw(12) << 100.0 * mean_ar_at_1 << '\n';
  os << std::left << std::setw(10) << "AR@1%";
  for (const auto& r : regions) os << std::right << std::setw(12) << 100.0 * r.ar_at_1pct;
  os << std::right << std::setw(12) << 100.0 * mean_ar_at_1pct << '\n';
  return os.str();
}

std::string RecallReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "kind,region,database_run,query_run,recall_at_1,recall_at_1pct\n";
  for (const auto& p : pairs)
    os << "pair," << p.region << ',' << p.database_run << ',' << p.query_run << ',' << p.recall_at_1 << ','
       << p.recall_at_1pct << '\n';
  for (const auto& r : regions) os << "region," << r.region << ",,," << r.ar_at_1 << ',' << r.ar_at_1pct << '\n';
  os << "mean,,,," << mean_ar_at_1 << ',' << mean_ar_at_1pct << '\n';
  return os.str();
}

}  // namespace minkunext
