#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "minkunext/eval/descriptor_db.hpp"
#include "minkunext/eval/protocol.hpp"
#include "minkunext/eval/recall.hpp"
#include "minkunext/train/synthetic.hpp"
#include "support/oracles.hpp"

using namespace minkunext;

namespace {

DescriptorDB make_db(const std::vector<std::vector<float>>& rows, const std::vector<Utm>& utm,
                     std::int64_t first_id = 0, const std::string& run = "r0", const std::string& region = "x") {
  DescriptorDB db;
  db.descriptors = Matrix<float>(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) db.descriptors(r, c) = rows[r][c];
    db.utm.push_back(utm[r]);
    db.ids.push_back(first_id + static_cast<std::int64_t>(r));
    db.regions.push_back(region);
    db.runs.push_back(run);
  }
  return db;
}

test_oracles::RecallCase to_case(const DescriptorDB& db, const DescriptorDB& q) {
  test_oracles::RecallCase c;
  for (std::size_t r = 0; r < db.size(); ++r) {
    c.db.emplace_back(db.descriptors.row(r).begin(), db.descriptors.row(r).end());
    c.db_utm.push_back({db.utm[r].northing, db.utm[r].easting});
    c.db_ids.push_back(db.ids[r]);
  }
  for (std::size_t r = 0; r < q.size(); ++r) {
    c.queries.emplace_back(q.descriptors.row(r).begin(), q.descriptors.row(r).end());
    c.query_utm.push_back({q.utm[r].northing, q.utm[r].easting});
  }
  return c;
}

DescriptorDB random_db(std::mt19937_64& rng, std::size_t n, std::size_t dim, std::int64_t first_id) {
  std::uniform_int_distribution<int> level(-2, 2);  // coarse values force distance ties
  std::uniform_real_distribution<double> pos(0, 200);
  std::vector<std::vector<float>> rows(n, std::vector<float>(dim));
  std::vector<Utm> utm;
  for (auto& r : rows)
    for (auto& v : r) v = static_cast<float>(level(rng));
  for (std::size_t i = 0; i < n; ++i) utm.push_back({pos(rng), pos(rng)});
  return make_db(rows, utm, first_id);
}

}  // namespace

TEST(Retrieve, OrdersByDistanceThenId) {
  const auto db = make_db({{1, 0}, {0, 0}, {0, 1}, {3, 3}}, {{0, 0}, {0, 0}, {0, 0}, {0, 0}});
  const std::vector<float> q{0, 0};
  const auto r = retrieve(q, db, 3);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].id, 1);
  EXPECT_EQ(r[1].id, 0);
  EXPECT_EQ(r[2].id, 2);
  EXPECT_DOUBLE_EQ(r[1].distance, 1.0);
  EXPECT_EQ(retrieve(q, db, 10).size(), 4u);
}

TEST(Recall, HandComputedExamples) {
  // query 0 sits at db entry 1's position but is closest to entry 0
  const auto db = make_db({{0, 0}, {5, 0}, {9, 9}}, {{0, 0}, {100, 0}, {300, 0}});
  const auto q = make_db({{0.1f, 0}, {9, 9}, {0, 0}}, {{100, 5}, {300, 20}, {1000, 0}}, 10, "r1");
  const LabelConfig cfg;
  // query 2 has nothing within 25 m and is left out
  EXPECT_DOUBLE_EQ(recall_at(db, q, 1, cfg), 0.5);
  EXPECT_DOUBLE_EQ(recall_at(db, q, 2, cfg), 1.0);
  EXPECT_DOUBLE_EQ(recall_at_one_percent(db, q, cfg), 0.5);
  const auto lost = make_db({{0, 0}}, {{5000, 0}}, 20, "r1");
  EXPECT_TRUE(std::isnan(recall_at(db, lost, 1, cfg)));
  EXPECT_THROW(recall_at(DescriptorDB{}, q, 1, cfg), std::invalid_argument);
}

TEST(Recall, OnePercentCutoff) {
  EXPECT_EQ(one_percent_cutoff(1), 1u);
  EXPECT_EQ(one_percent_cutoff(64), 1u);
  EXPECT_EQ(one_percent_cutoff(100), 1u);
  EXPECT_EQ(one_percent_cutoff(149), 1u);
  EXPECT_EQ(one_percent_cutoff(150), 2u);
  EXPECT_EQ(one_percent_cutoff(250), 3u);
  EXPECT_EQ(one_percent_cutoff(3000), 30u);
  for (std::size_t m = 0; m < 5000; m += 7) EXPECT_EQ(one_percent_cutoff(m), test_oracles::one_percent_by_rounding(m));
}

TEST(RecallProperty, MatchesBruteForceExactly) {
  std::mt19937_64 rng(12);
  const LabelConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    const auto db = random_db(rng, 20 + static_cast<std::size_t>(trial) * 5, 3, 0);
    const auto q = random_db(rng, 15, 3, 1000);
    const auto c = to_case(db, q);
    for (std::size_t n : {1u, 2u, 5u}) {
      const double expected = test_oracles::brute_force_recall(c, n, cfg.success_radius);
      const double got = recall_at(db, q, n, cfg);
      if (std::isnan(expected)) EXPECT_TRUE(std::isnan(got));
      else EXPECT_EQ(got, expected);
    }
    const double one_pct =
        test_oracles::brute_force_recall(c, test_oracles::one_percent_by_rounding(db.size()), cfg.success_radius);
    if (!std::isnan(one_pct)) {
      EXPECT_EQ(recall_at_one_percent(db, q, cfg), one_pct);
    }
  }
}

TEST(Recall, PerfectSeparationGivesOne) {
  // each place's variants strictly closer to each other than to any other place
  std::vector<std::vector<float>> a, b;
  std::vector<Utm> ua, ub;
  for (int p = 0; p < 10; ++p) {
    a.push_back({static_cast<float>(10 * p), 0});
    b.push_back({static_cast<float>(10 * p) + 0.5f, 0.5f});
    ua.push_back({100.0 * p, 0});
    ub.push_back({100.0 * p + 3, 0});
  }
  const auto db = make_db(a, ua, 0, "r0");
  const auto q = make_db(b, ub, 10, "r1");
  EXPECT_EQ(recall_at(db, q, 1, LabelConfig{}), 1.0);
}

TEST(DescriptorDb, RoundTripAndSubset) {
  std::mt19937_64 rng(13);
  auto db = random_db(rng, 6, 4, 3);
  db.runs[2] = "other";
  const auto path = std::filesystem::temp_directory_path() / "minkunext_test_db.bin";
  save_descriptor_db(path, db);
  const auto back = load_descriptor_db(path);
  EXPECT_EQ(back.descriptors, db.descriptors);
  EXPECT_EQ(back.ids, db.ids);
  EXPECT_EQ(back.runs, db.runs);
  EXPECT_EQ(back.regions, db.regions);
  for (std::size_t i = 0; i < db.size(); ++i) EXPECT_EQ(back.utm[i].easting, db.utm[i].easting);
  const std::vector<std::size_t> rows{2, 0};
  const auto s = db.subset(rows);
  EXPECT_EQ(s.ids, (std::vector<std::int64_t>{5, 3}));
  EXPECT_EQ(s.runs[0], "other");
  std::filesystem::resize_file(path, 20);
  EXPECT_THROW(load_descriptor_db(path), std::runtime_error);
  std::filesystem::remove(path);
  db.ids.pop_back();
  EXPECT_THROW(db.validate(), std::invalid_argument);
}

TEST(EvaluateDescriptors, AveragesOrderedRunPairsPerRegion) {
  // region x: runs r0 and r1, perfect retrieval; region y: runs s0, s1, s2
  // where s2's descriptors point to the wrong place
  DescriptorDB db;
  std::vector<std::vector<float>> rows;
  std::vector<Utm> utm;
  std::vector<std::string> runs, regions;
  auto add = [&](const std::string& region, const std::string& run, int place, float shift, int looks_like) {
    rows.push_back({static_cast<float>(looks_like) + shift, 0});
    utm.push_back({100.0 * place + (region == "y" ? 10000 : 0), 0});
    runs.push_back(run);
    regions.push_back(region);
  };
  for (int p = 0; p < 3; ++p) {
    add("x", "r0", p, 0, p);
    add("x", "r1", p, 0.1f, p);
    add("y", "s0", p, 0, p);
    add("y", "s1", p, 0.1f, p);
    add("y", "s2", p, 0.1f, (p + 1) % 3);
  }
  db = make_db(rows, utm);
  db.runs = runs;
  db.regions = regions;
  const auto report = evaluate_descriptors(db, LabelConfig{}, "baseline");
  EXPECT_EQ(report.protocol, "baseline");
  ASSERT_EQ(report.regions.size(), 2u);
  EXPECT_EQ(report.pairs.size(), 2u + 6u);
  const auto& x = report.regions[0].region == "x" ? report.regions[0] : report.regions[1];
  const auto& y = report.regions[0].region == "y" ? report.regions[0] : report.regions[1];
  EXPECT_EQ(x.ar_at_1, 1.0);
  EXPECT_EQ(x.pairs, 2u);
  // y: (s0,s1) and (s1,s0) perfect, the four pairs touching s2 score 0
  EXPECT_NEAR(y.ar_at_1, 2.0 / 6.0, 1e-12);
  EXPECT_NEAR(report.mean_ar_at_1, (1.0 + 2.0 / 6.0) / 2.0, 1e-12);
  EXPECT_NE(report.to_table().find("Mean"), std::string::npos);
  EXPECT_NE(report.to_csv().find("s2"), std::string::npos);
}

TEST(EvaluateProtocol, UsesTheTestSplitOnly) {
  std::mt19937_64 rng(14);
  const auto data = generate_synthetic(4, 3, 64, rng);
  auto cfg = scale_channels(ArchConfig{}, 8);
  cfg.quantization_size = 0.1;
  MinkUNeXt<float> model(cfg, 0);
  const auto report = evaluate_protocol(model, data, Protocol::refined);
  EXPECT_EQ(report.protocol, "refined");
  // 2 test variants -> one region, 2 ordered run pairs
  ASSERT_EQ(report.pairs.size(), 2u);
  for (const auto& p : report.pairs) EXPECT_NE(p.database_run, "synthetic/run_00");
  Dataset train_only;
  for (const auto& r : data.records)
    if (r.split == Split::train) train_only.records.push_back(r);
  EXPECT_THROW(evaluate_protocol(model, train_only, Protocol::baseline), std::invalid_argument);
}
