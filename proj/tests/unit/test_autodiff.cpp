#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "minkunext/autodiff/checkpoint.hpp"
#include "minkunext/autodiff/ops.hpp"
#include "minkunext/autodiff/optim.hpp"
#include "minkunext/autodiff/tape.hpp"
#include "minkunext/check/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace minkunext;
using namespace minkunext::ad;

namespace {

Matrix<double> random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix<double> m(r, c);
  for (auto& v : m.flat()) v = u(rng);
  return m;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("minkunext_test_" + name);
}

}  // namespace

TEST(Tape, LossEqualToParameterHasUnitGradient) {
  Parameter<double> p("p", Matrix<double>{{3.0}});
  Tape<double> tape;
  const auto id = tape.parameter(p);
  tape.backward(id);
  EXPECT_EQ(p.grad(0, 0), 1.0);
}

TEST(Tape, FanOutAccumulates) {
  Parameter<double> p("p", Matrix<double>{{3.0, -1.0}});
  Tape<double> tape;
  const auto x = tape.parameter(p);
  const auto y = add(tape, x, x);
  tape.backward(sum(tape, y));
  EXPECT_EQ(p.grad, (Matrix<double>{{2.0, 2.0}}));
}

TEST(Tape, DuplicatingAConsumerDoublesTheGradient) {
  std::mt19937_64 rng(41);
  Parameter<double> w("w", random_matrix(3, 2, rng));
  const auto x = random_matrix(4, 3, rng);
  auto grad_of = [&](int copies) {
    w.zero_grad();
    Tape<double> tape;
    const auto xi = tape.constant(x);
    const auto wi = tape.parameter(w);
    auto y = gelu(tape, linear(tape, xi, wi, std::nullopt));
    auto total = y;
    for (int i = 1; i < copies; ++i) total = add(tape, total, y);
    tape.backward(sum(tape, total));
    return w.grad;
  };
  const auto one = grad_of(1);
  const auto two = grad_of(2);
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_NEAR(two.data()[i], 2.0 * one.data()[i], 1e-14);
}

TEST(Tape, NonScalarLossIsRejected) {
  Parameter<double> p("p", Matrix<double>{{1.0, 2.0}});
  Tape<double> tape;
  const auto id = tape.parameter(p);
  EXPECT_THROW(tape.backward(id), std::invalid_argument);
}

TEST(Tape, UnreachedParametersKeepZeroGradient) {
  Parameter<double> a("a", Matrix<double>{{1.0}});
  Parameter<double> b("b", Matrix<double>{{1.0}});
  Tape<double> tape;
  const auto ia = tape.parameter(a);
  tape.parameter(b);
  tape.backward(sum(tape, ia));
  EXPECT_EQ(b.grad(0, 0), 0.0);
}

TEST(Tape, NodesAreTopologicallyOrdered) {
  Tape<double> tape;
  const auto x = tape.constant(Matrix<double>{{1.0}});
  const auto y = relu(tape, x);
  EXPECT_LT(tape.inputs(y).front(), y);
  EXPECT_THROW(tape.record("bad", Matrix<double>{{0.0}}, {99}, nullptr), std::out_of_range);
}

TEST(TapeProperty, RandomComposedGraphsMatchFiniteDifferences) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> pick(0, 5);
  for (int trial = 0; trial < 25; ++trial) {
    Parameter<double> x("x", random_matrix(5, 4, rng));
    Parameter<double> w("w", random_matrix(4, 4, rng));
    Parameter<double> g("g", random_matrix(1, 4, rng));
    Parameter<double> b("b", random_matrix(1, 4, rng));
    std::vector<int> ops;
    for (int i = 0; i < 5; ++i) ops.push_back(pick(rng));
    const auto weights = random_matrix(5, 4, rng);
    auto objective = [&](Tape<double>& tape) {
      auto h = tape.parameter(x);
      const auto wi = tape.parameter(w);
      const auto gi = tape.parameter(g);
      const auto bi = tape.parameter(b);
      for (int op : ops) {
        switch (op) {
          case 0: h = linear(tape, h, wi, bi); break;
          case 1: h = gelu(tape, h); break;
          case 2: h = layer_norm(tape, h, gi, bi, 1e-6); break;
          case 3: h = add(tape, h, linear(tape, h, wi, std::nullopt)); break;
          case 4: h = relu(tape, add(tape, h, tape.constant(Matrix<double>(5, 4, 0.37)))); break;
          default: {
            const auto wide = concat(tape, h, h);
            h = linear(tape, wide, tape.constant(Matrix<double>(8, 4, 0.25)), std::nullopt);
          }
        }
      }
      return weighted_sum(tape, h, weights);
    };
    check::GradCheckOptions opts;
    opts.seed = static_cast<std::uint64_t>(trial);
    const auto r = check::check_gradients("composed", {&x, &w, &g, &b}, objective, opts);
    EXPECT_TRUE(r.passed()) << "trial " << trial << " max rel " << r.max_rel_error;
  }
}

TEST(Adam, ZeroGradientZeroDecayIsIdentity) {
  Parameter<double> p("p", Matrix<double>{{0.5, -2.0}});
  Adam<double> opt({&p}, AdamConfig{});
  for (int i = 0; i < 3; ++i) opt.step();
  EXPECT_EQ(p.value, (Matrix<double>{{0.5, -2.0}}));
}

TEST(Adam, FirstStepClosedForm) {
  Parameter<double> p("p", Matrix<double>{{1.0}});
  Adam<double> opt({&p}, AdamConfig{});
  p.grad(0, 0) = 1.0;
  opt.step();
  // m_hat = 1, v_hat = 1 after bias correction
  EXPECT_NEAR(p.value(0, 0), 1.0 - 1e-3 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, MatchesScalarRecurrence) {
  for (const double wd : {0.0, 1e-4, 0.1}) {
    Parameter<double> p("p", Matrix<double>{{0.8}});
    AdamConfig cfg;
    cfg.weight_decay = wd;
    Adam<double> opt({&p}, cfg);
    test_oracles::ScalarAdam ref{.theta = 0.8, .lr = 1e-3, .wd = wd};
    const double grads[] = {0.3, 0.3, -1.2, 0.05, 2.0};
    for (double g : grads) {
      p.grad(0, 0) = g;
      opt.step();
      ref.step(g);
      EXPECT_NEAR(p.value(0, 0), ref.theta, 1e-15);
    }
    EXPECT_EQ(opt.step_count(), 5u);
    EXPECT_GE(opt.second_moments()[0](0, 0), 0.0);
  }
}

TEST(LrSchedule, BaselineMilestones) {
  LrSchedule s{1e-3, {250, 350}, 0.1};
  EXPECT_DOUBLE_EQ(s.lr_at(0), 1e-3);
  EXPECT_DOUBLE_EQ(s.lr_at(249), 1e-3);
  EXPECT_NEAR(s.lr_at(250), 1e-4, 1e-18);
  EXPECT_NEAR(s.lr_at(400), 1e-5, 1e-18);
}

TEST(LrScheduleProperty, NonIncreasingWithMilestonesPlusOneLevels) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    std::set<int> ms;
    std::uniform_int_distribution<int> e(1, 99);
    const int count = 1 + trial % 4;
    while (static_cast<int>(ms.size()) < count) ms.insert(e(rng));
    LrSchedule s{1e-2, {ms.begin(), ms.end()}, 0.1};
    s.validate();
    std::set<double> levels;
    for (int ep = 0; ep < 100; ++ep) {
      if (ep > 0) {
        EXPECT_LE(s.lr_at(ep), s.lr_at(ep - 1));
      }
      levels.insert(s.lr_at(ep));
    }
    EXPECT_EQ(levels.size(), ms.size() + 1);
  }
  EXPECT_THROW((LrSchedule{1e-3, {5, 5}, 0.1}.validate()), std::invalid_argument);
}

TEST(Checkpoint, RoundTrip) {
  Checkpoint c;
  c.metadata = "{\"k\": 1}";
  c.tensors.push_back({"a.weight", {2, 3}, {1, 2, 3, 4, 5, 6}});
  c.tensors.push_back({"gem.p", {1, 1}, {3.0f}});
  OptimizerSnapshot o;
  o.step = 7;
  o.lr = 1e-4;
  o.weight_decay = 1e-4;
  o.first_moments.push_back({"a.weight", {2, 3}, {0.1f, 0, 0, 0, 0, 0.2f}});
  o.second_moments.push_back({"a.weight", {2, 3}, {0.01f, 0, 0, 0, 0, 0.02f}});
  c.optimizer = o;
  const auto path = temp_file("ckpt.bin");
  save_checkpoint(path, c);
  const auto r = load_checkpoint(path);
  EXPECT_EQ(r.metadata, c.metadata);
  ASSERT_EQ(r.tensors.size(), 2u);
  EXPECT_EQ(r.tensors[0].name, "a.weight");
  EXPECT_EQ(r.tensors[0].shape, (std::vector<std::uint64_t>{2, 3}));
  EXPECT_EQ(r.tensors[0].data, c.tensors[0].data);
  ASSERT_TRUE(r.optimizer.has_value());
  EXPECT_EQ(r.optimizer->step, 7u);
  EXPECT_EQ(r.optimizer->first_moments[0].data, o.first_moments[0].data);
  EXPECT_EQ(r.optimizer->second_moments[0].data, o.second_moments[0].data);
  ASSERT_NE(r.find("gem.p"), nullptr);
  EXPECT_EQ(r.find("missing"), nullptr);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsForeignAndTruncatedFiles) {
  const auto path = temp_file("bad.bin");
  {
    std::ofstream os(path, std::ios::binary);
    os << "definitely not a checkpoint";
  }
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
  Checkpoint c;
  c.tensors.push_back({"w", {4}, {1, 2, 3, 4}});
  save_checkpoint(path, c);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
  std::filesystem::remove(path);
}
