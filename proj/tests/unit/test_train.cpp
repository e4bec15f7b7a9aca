#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "minkunext/train/augment.hpp"
#include "minkunext/train/config.hpp"
#include "minkunext/train/dataset.hpp"
#include "minkunext/train/labels.hpp"
#include "minkunext/train/sampler.hpp"
#include "minkunext/train/synthetic.hpp"
#include "minkunext/train/trainer.hpp"
#include "minkunext/train/tsap.hpp"
#include "support/oracles.hpp"

using namespace minkunext;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("minkunext_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

PairLabels table(std::size_t n, const std::string& rows) {
  // 'p' positive, 'n' negative, '.' ignored
  std::vector<Relation> rel;
  for (char c : rows) rel.push_back(c == 'p' ? Relation::positive : c == 'n' ? Relation::negative : Relation::ignored);
  return PairLabels::from_relations(n, rel);
}

PairLabels random_labels(std::mt19937_64& rng, std::size_t n) {
  std::vector<Utm> utms;
  std::uniform_real_distribution<double> u(0, 60);
  for (std::size_t i = 0; i < n; ++i) utms.push_back({u(rng), u(rng)});
  return PairLabels(utms, LabelConfig{});
}

Matrix<double> random_descriptors(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::normal_distribution<double> g(0, 1);
  Matrix<double> m(n, d);
  for (auto& v : m.flat()) v = g(rng);
  return m;
}

}  // namespace

TEST(Labels, RadiusBoundaries) {
  const LabelConfig cfg;
  EXPECT_EQ(label_pair({0, 0}, {10, 0}, cfg), Relation::positive);
  EXPECT_EQ(label_pair({0, 0}, {10.001, 0}, cfg), Relation::ignored);
  EXPECT_EQ(label_pair({0, 0}, {0, 50}, cfg), Relation::ignored);
  EXPECT_EQ(label_pair({0, 0}, {0, 50.001}, cfg), Relation::negative);
  EXPECT_DOUBLE_EQ(utm_distance({0, 0}, {3, 4}), 5.0);
  LabelConfig bad;
  bad.negative_radius = 5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Labels, SymmetricWithIgnoredDiagonal) {
  std::mt19937_64 rng(1);
  const auto l = random_labels(rng, 30);
  for (std::size_t a = 0; a < l.size(); ++a) {
    EXPECT_EQ(l(a, a), Relation::ignored);
    for (std::size_t b = 0; b < l.size(); ++b) EXPECT_EQ(l(a, b), l(b, a));
    EXPECT_EQ(l.positives_of(a).size(), l.positive_count(a));
  }
  const std::vector<std::size_t> rows{4, 2, 9};
  const auto s = l.subset(rows);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(s(a, b), l(rows[a], rows[b]));
}

TEST(Tsap, SinglePositiveNoNegativeIsZero) {
  const auto labels = table(2, ".pp.");
  const Matrix<double> d{{0.0, 0.0}, {0.3, 0.4}};
  const auto r = tsap_loss(d, labels, LossConfig{});
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.valid_queries, 2u);
}

TEST(Tsap, EqualDistancePositiveAndNegativeIsOneThird) {
  const auto labels = table(3, ".pn" "..." "...");
  const Matrix<double> d{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  const auto r = tsap_loss(d, labels, LossConfig{});
  EXPECT_EQ(r.valid_queries, 1u);
  EXPECT_NEAR(r.loss, 1.0 / 3.0, 1e-12);
}

TEST(Tsap, WellSeparatedNegativesDriveLossToZero) {
  const auto labels = table(3, ".pn" "p.n" "nn.");
  const Matrix<double> d{{0.0, 0.0}, {0.1, 0.0}, {5.0, 0.0}};
  EXPECT_LT(tsap_loss(d, labels, LossConfig{}).loss, 1e-12);
}

TEST(Tsap, Errors) {
  const Matrix<double> d{{0.0}, {1.0}};
  EXPECT_THROW(tsap_loss(d, table(2, "...."), LossConfig{}), std::invalid_argument);
  EXPECT_THROW(tsap_loss(d, table(3, "........."), LossConfig{}), std::invalid_argument);
  LossConfig bad;
  bad.tau = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = LossConfig{};
  bad.k = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(TsapProperty, LargeKMatchesUntruncatedSmoothAp) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 6 + static_cast<std::size_t>(trial % 10);
    const auto labels = random_labels(rng, n);
    bool any = false;
    for (std::size_t q = 0; q < n; ++q) any = any || labels.positive_count(q) > 0;
    if (!any) continue;
    const auto d = random_descriptors(rng, n, 4);
    LossConfig cfg;
    cfg.tau = 0.1 + 0.1 * (trial % 3);
    cfg.k = static_cast<int>(n);
    EXPECT_NEAR(tsap_loss(d, labels, cfg).loss, test_oracles::smooth_ap_loss(d, labels, cfg.tau), 1e-12);
  }
}

TEST(TsapProperty, TruncationKeepsNearestPositives) {
  // query 0 has positives 1 (near), 2 (middle), 3 (far); rows 1..3 only see
  // query 0 and contribute zero
  const auto full = table(5, ".pppn" "p...." "p...." "p...." ".....");
  const auto nearest_two = table(5, ".pp.n" "....." "....." "....." ".....");
  const Matrix<double> d{{0, 0}, {0.1, 0}, {0.2, 0}, {0.9, 0}, {0.15, 0}};
  LossConfig cut;
  cut.k = 2;
  LossConfig all;
  all.k = 5;
  EXPECT_NEAR(tsap_loss(d, full, cut).loss * 4.0, tsap_loss(d, nearest_two, all).loss, 1e-12);
  EXPECT_NE(tsap_loss(d, full, cut).loss, tsap_loss(d, full, all).loss);
}

TEST(TsapProperty, MonotoneInNegativeDistance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  int checked = 0;
  while (checked < 100) {
    const std::size_t n = 5;
    const auto labels = random_labels(rng, n);
    auto d = random_descriptors(rng, n, 3);
    std::size_t q = n, neg = n;
    for (std::size_t a = 0; a < n && q == n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (labels.positive_count(a) > 0 && labels(a, b) == Relation::negative) {
          q = a;
          neg = b;
          break;
        }
    if (q == n) continue;
    // other queries must not see the moved row, so compare only query q
    std::vector<Relation> rel(n * n, Relation::ignored);
    for (std::size_t b = 0; b < n; ++b) rel[q * n + b] = labels(q, b);
    const auto only_q = PairLabels::from_relations(n, rel);
    LossConfig cfg;
    cfg.tau = 0.5;
    const double before = tsap_loss(d, only_q, cfg).loss;
    // push the negative away from the query along their difference
    const double f = 1.0 + u(rng);
    for (std::size_t c = 0; c < d.cols(); ++c) d(neg, c) = d(q, c) + f * (d(neg, c) - d(q, c));
    EXPECT_LE(tsap_loss(d, only_q, cfg).loss, before + 1e-15);
    ++checked;
  }
}

TEST(TsapProperty, LossInUnitInterval) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const auto labels = random_labels(rng, 12);
    const auto d = random_descriptors(rng, 12, 3);
    try {
      const double l = tsap_loss(d, labels, LossConfig{}).loss;
      EXPECT_GE(l, 0.0);
      EXPECT_LE(l, 1.0);
    } catch (const std::invalid_argument&) {
    }
  }
}

TEST(Sampler, EveryBatchMemberHasAnInBatchPositive) {
  std::mt19937_64 rng(5);
  SyntheticConfig sc;
  sc.points = 16;
  const auto data = generate_synthetic(sc, rng);
  const auto train = data.select(Split::train);
  ASSERT_EQ(train.size(), 64u * 8u);
  const auto labels = label_pairs(train, LabelConfig{});
  LossConfig cfg;
  cfg.batch_size = 64;
  for (int epoch = 0; epoch < 3; ++epoch) {
    const auto batches = sample_epoch(labels, cfg, rng);
    std::set<std::size_t> seen;
    for (const auto& b : batches) {
      EXPECT_LE(b.size(), 64u);
      EXPECT_EQ(std::set<std::size_t>(b.begin(), b.end()).size(), b.size());
      for (std::size_t i : b) {
        seen.insert(i);
        bool has = false;
        for (std::size_t j : b) has = has || labels(i, j) == Relation::positive;
        EXPECT_TRUE(has);
      }
    }
    EXPECT_EQ(seen.size(), train.size());
  }
}

TEST(Sampler, NoPositivesAnywhere) {
  std::mt19937_64 rng(6);
  LossConfig cfg;
  cfg.batch_size = 4;
  EXPECT_THROW(sample_epoch(table(3, "........."), cfg, rng), std::invalid_argument);
}

TEST(Augment, DropsJittersAndShiftsWithinBounds) {
  std::mt19937_64 rng(7);
  PointCloud c;
  for (int i = 0; i < 100; ++i) c.points.push_back({1.0 * i, -1.0 * i, 0.5});
  const AugmentConfig cfg;
  const auto a = augment(c, cfg, rng);
  ASSERT_EQ(a.size(), 90u);
  // surviving points keep order: x is increasing in the source
  std::size_t src = 0;
  for (const auto& p : a.points) {
    while (src < c.size() && std::abs(p[0] - c.points[src][0]) > 0.5) ++src;
    ASSERT_LT(src, c.size());
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_GE(p[k] - c.points[src][k], 0.0);
      EXPECT_LE(p[k] - c.points[src][k], cfg.jitter_max + cfg.global_shift_max);
    }
    ++src;
  }
  AugmentConfig bad;
  bad.drop_fraction = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Synthetic, LayoutSplitsAndRanges) {
  std::mt19937_64 rng(8);
  SyntheticConfig sc;
  sc.places = 9;
  sc.variants = 5;
  sc.test_variants = 2;
  sc.points = 64;
  const auto data = generate_synthetic(sc, rng);
  ASSERT_EQ(data.size(), 45u);
  EXPECT_EQ(data.select(Split::test).size(), 18u);
  std::map<std::string, int> per_run;
  for (const auto& r : data.records) {
    EXPECT_EQ(r.cloud.size(), 64u);
    EXPECT_EQ(r.region, "synthetic");
    ++per_run[r.run];
    for (const auto& p : r.cloud.points)
      for (double v : p) EXPECT_LE(std::abs(v), 1.0 + 1e-12);
  }
  EXPECT_EQ(per_run.size(), 5u);
  const auto labels = label_pairs(data.records, LabelConfig{});
  for (std::size_t a = 0; a < data.size(); ++a)
    for (std::size_t b = 0; b < data.size(); ++b) {
      if (a == b) continue;
      const auto& pa = data.records[a].path;
      const auto& pb = data.records[b].path;
      const bool same_place = pa.substr(pa.rfind('/')) == pb.substr(pb.rfind('/'));
      if (same_place) EXPECT_EQ(labels(a, b), Relation::positive);
      else EXPECT_EQ(labels(a, b), Relation::negative);
    }
}

TEST(Synthetic, SeedReproducible) {
  std::mt19937_64 a(9), b(9);
  const auto x = generate_synthetic(4, 2, 32, a);
  const auto y = generate_synthetic(4, 2, 32, b);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x.records[i].cloud.points, y.records[i].cloud.points);
}

TEST(Synthetic, NormalizeAndErrors) {
  PointCloud c{{{1, 1, 1}, {3, 1, 1}}};
  normalize_cloud(c);
  EXPECT_EQ(c.points[0], (Point3{-1, 0, 0}));
  EXPECT_EQ(c.points[1], (Point3{1, 0, 0}));
  PointCloud same{{{2, 2, 2}, {2, 2, 2}}};
  EXPECT_THROW(normalize_cloud(same), std::invalid_argument);
  std::mt19937_64 rng(1);
  EXPECT_THROW(generate_synthetic(0, 2, 32, rng), std::invalid_argument);
  SyntheticConfig close;
  close.grid_spacing = 5;
  EXPECT_THROW(close.validate(), std::invalid_argument);
}

TEST(DatasetIo, BenchmarkSubmapSizeAndMalformedFile) {
  const auto dir = temp_dir("submap");
  std::vector<double> raw(4096 * 3);
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = 0.001 * static_cast<double>(i);
  {
    std::ofstream os(dir / "a.bin", std::ios::binary);
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
  }
  EXPECT_EQ(std::filesystem::file_size(dir / "a.bin"), 98304u);
  const auto c = load_submap_bin(dir / "a.bin");
  ASSERT_EQ(c.size(), 4096u);
  EXPECT_EQ(c.points[1], (Point3{0.003, 0.004, 0.005}));
  {
    std::ofstream os(dir / "b.bin", std::ios::binary);
    os.write(reinterpret_cast<const char*>(raw.data()), 100);
  }
  try {
    load_submap_bin(dir / "b.bin");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "malformed submap");
  }
  std::filesystem::remove_all(dir);
}

TEST(DatasetIo, IndexRoundTrip) {
  const auto dir = temp_dir("dataset");
  std::mt19937_64 rng(10);
  const auto data = generate_synthetic(3, 2, 20, rng);
  save_dataset(dir, data);
  const auto back = load_dataset(dir);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back.records[i].id, static_cast<std::int64_t>(i));
    EXPECT_EQ(back.records[i].cloud.points, data.records[i].cloud.points);
    EXPECT_DOUBLE_EQ(back.records[i].utm.northing, data.records[i].utm.northing);
    EXPECT_EQ(back.records[i].split, data.records[i].split);
    EXPECT_EQ(back.records[i].region, "synthetic");
    EXPECT_EQ(back.records[i].run, data.records[i].run);
  }
  {
    std::ofstream os(dir / "index.csv");
    os << "path,n,e\n";
  }
  EXPECT_THROW(load_dataset(dir), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(TrainConfig, PresetsAndLrSequences) {
  const auto base = baseline_train_config();
  EXPECT_EQ(base.loss.batch_size, 2048);
  EXPECT_EQ(base.epochs, 400);
  EXPECT_EQ(base.milestones, (std::vector<int>{250, 350}));
  EXPECT_DOUBLE_EQ(base.loss.tau, 0.01);
  EXPECT_EQ(base.loss.k, 4);
  EXPECT_DOUBLE_EQ(base.arch.quantization_size, 0.01);
  EXPECT_EQ(base.effective_train_regions(), (std::vector<std::string>{"oxford"}));
  const auto ref = refined_train_config();
  EXPECT_EQ(ref.epochs, 500);
  EXPECT_EQ(ref.milestones, (std::vector<int>{350, 450}));
  EXPECT_EQ(ref.effective_train_regions().size(), 3u);

  const auto seq = lr_sequence(base);
  ASSERT_EQ(seq.size(), 400u);
  for (std::size_t e = 0; e < seq.size(); ++e) {
    const double expected = e < 250 ? 1e-3 : e < 350 ? 1e-4 : 1e-5;
    EXPECT_NEAR(seq[e], expected, 1e-18);
  }

  const auto desk = desk_train_config();
  EXPECT_EQ(desk.arch.encoder_channels, (std::array<int, 4>{8, 16, 32, 64}));
  EXPECT_EQ(desk.loss.batch_size, 64);
  EXPECT_EQ(desk.epochs, 50);
}

TEST(TrainConfig, JsonRoundTripAndPresetOverrides) {
  const auto cfg = refined_train_config();
  EXPECT_EQ(to_json(train_config_from_json(to_json(cfg))), to_json(cfg));
  const auto c = train_config_from_json(R"({"preset": "desk", "epochs": 3, "loss": {"k": 2}})");
  EXPECT_EQ(c.epochs, 3);
  EXPECT_EQ(c.loss.k, 2);
  EXPECT_EQ(c.loss.batch_size, 64);
  EXPECT_THROW(train_config_from_json(R"({"preset": "huge"})"), std::invalid_argument);
  EXPECT_EQ(protocol_from_string("refined"), Protocol::refined);
}

TEST(Trainer, SmokeRunIsSeedReproducible) {
  std::mt19937_64 rng(11);
  const auto data = generate_synthetic(6, 4, 96, rng);
  auto cfg = desk_train_config();
  cfg.epochs = 2;
  cfg.milestones = {1};
  cfg.loss.batch_size = 12;
  cfg.eval_every = 1;
  cfg.arch = scale_channels(ArchConfig{}, 8);
  cfg.arch.quantization_size = 0.1;
  const auto log = std::filesystem::temp_directory_path() / "minkunext_test_metrics.csv";
  std::filesystem::remove(log);
  TrainOptions opts;
  opts.metrics_log = log;
  const auto a = train(cfg, data, 5, opts);
  const auto b = train(cfg, data, 5);
  const auto c = train(cfg, data, 6);
  ASSERT_EQ(a.history.size(), 2u);
  EXPECT_EQ(a.history[0].loss, b.history[0].loss);
  EXPECT_NE(a.history[0].loss, c.history[0].loss);
  EXPECT_DOUBLE_EQ(a.history[1].lr, 1e-4);
  EXPECT_TRUE(std::isfinite(a.history[1].val_ar_at_1));
  std::ifstream in(log);
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_GE(lines, 2);
  std::filesystem::remove(log);

  auto no_region = cfg;
  no_region.train_regions = {"oxford"};
  EXPECT_THROW(train(no_region, data, 0), std::invalid_argument);
}
