#include <gtest/gtest.h>

#include "minkunext/check/dense_oracle.hpp"
#include "minkunext/check/gradcheck.hpp"

using namespace minkunext;

TEST(DenseOracle, SmallRandomCampaignPasses) {
  check::OracleTrialConfig cfg;
  cfg.trials = 40;
  cfg.seed = 3;
  const auto r = check::run_dense_oracle(cfg);
  EXPECT_TRUE(r.ok()) << (r.failures.empty() ? "" : r.failures.front());
  EXPECT_LE(r.max_error_double, 1e-10);
  EXPECT_LE(r.max_error_float, 1e-5);
}

TEST(DenseOracle, OutputCoordsOfStrideTwo) {
  const std::vector<VoxelCoord> in{{0, 0, 0, 0}, {0, 1, 1, 1}, {0, 2, 0, 3}};
  const auto out = check::dense_output_coords(in, 1, 2);
  EXPECT_EQ(out, (std::vector<VoxelCoord>{{0, 0, 0, 0}, {0, 2, 0, 2}}));
}

class GradCheckCase : public ::testing::TestWithParam<std::string> {};

TEST_P(GradCheckCase, MatchesCentralDifferences) {
  const auto results = check::run_gradcheck_suite(GetParam());
  ASSERT_FALSE(results.empty());
  for (const auto& r : results) EXPECT_TRUE(r.passed()) << r.name << " max rel " << r.max_rel_error;
}

INSTANTIATE_TEST_SUITE_P(AllOps, GradCheckCase, ::testing::ValuesIn(check::gradcheck_case_names()),
                         [](const auto& info) {
                           std::string s = info.param;
                           for (auto& c : s)
                             if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
                           return s;
                         });

TEST(GradCheck, UnknownCase) { EXPECT_THROW(check::run_gradcheck_suite("nope"), std::invalid_argument); }
