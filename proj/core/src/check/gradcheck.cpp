#include "minkunext/check/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "minkunext/autodiff/ops.hpp"
#include "minkunext/kernel_map.hpp"
#include "minkunext/model/minkunext.hpp"
#include "minkunext/train/tsap.hpp"

namespace minkunext::check {

GradCheckResult check_gradients(std::string name, const std::vector<ad::Parameter<double>*>& leaves,
                                const Objective& objective, const GradCheckOptions& opts) {
  GradCheckResult result;
  result.name = std::move(name);
  for (auto* p : leaves) p->zero_grad();
  {
    ad::Tape<double> tape(true);
    tape.backward(objective(tape));
  }
  auto evaluate = [&] {
    ad::Tape<double> tape(false);
    const auto id = objective(tape);
    return tape.value(id)(0, 0);
  };
  const double f0 = evaluate();
  const double h = opts.step;

  std::mt19937_64 rng(opts.seed);
  for (auto* p : leaves) {
    std::vector<std::size_t> entries(p->value.size());
    std::iota(entries.begin(), entries.end(), std::size_t{0});
    if (entries.size() > opts.max_entries_per_leaf) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(opts.max_entries_per_leaf);
      std::sort(entries.begin(), entries.end());
    }
    for (std::size_t e : entries) {
      double& v = p->value.data()[e];
      const double saved = v;
      v = saved + h;
      const double fp = evaluate();
      v = saved - h;
      const double fm = evaluate();
      v = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double analytic = p->grad.data()[e];
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      if (scale <= opts.min_magnitude) continue;
      ++result.compared;
      const double rel = std::abs(numeric - analytic) / scale;
      if (rel <= opts.rel_tolerance) {
        result.max_rel_error = std::max(result.max_rel_error, rel);
        continue;
      }
      const double forward = (fp - f0) / h;
      const double backward = (f0 - fm) / h;
      if (std::abs(forward - backward) > 1e-2 * std::max(std::abs(forward), std::abs(backward)) + opts.min_magnitude) {
        ++result.kinks;
        continue;
      }
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.failures;
    }
  }
  return result;
}

namespace {

using Leaf = ad::Parameter<double>;

Matrix<double> random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix<double> m(r, c);
  for (auto& v : m.flat()) v = d(rng);
  return m;
}

CoordinateMapPtr random_coords(int grid, double occupancy, int batches, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<VoxelCoord> coords;
  for (int b = 0; b < batches; ++b)
    for (int x = 0; x < grid; ++x)
      for (int y = 0; y < grid; ++y)
        for (int z = 0; z < grid; ++z)
          if (u(rng) < occupancy) coords.push_back({b, x, y, z});
  if (coords.size() < 2) coords = {{0, 0, 0, 0}, {0, 1, 0, 0}};
  return build_coordinate_map(std::move(coords), 1);
}

/// Objective sum(R * op(leaves)) for a fixed random R.
Objective weighted(std::function<ad::VarId(ad::Tape<double>&)> op, std::shared_ptr<Matrix<double>> r) {
  return [op = std::move(op), r](ad::Tape<double>& tape) { return ad::weighted_sum(tape, op(tape), *r); };
}

std::shared_ptr<Matrix<double>> projection_for(const std::function<ad::VarId(ad::Tape<double>&)>& op,
                                               std::mt19937_64& rng) {
  ad::Tape<double> tape(false);
  const auto& v = tape.value(op(tape));
  return std::make_shared<Matrix<double>>(random_matrix(v.rows(), v.cols(), rng));
}

struct Case {
  std::string name;
  std::function<GradCheckResult(const GradCheckOptions&)> run;
};

GradCheckResult run_op(const std::string& name, std::vector<std::shared_ptr<Leaf>> leaves,
                       std::function<ad::VarId(ad::Tape<double>&)> op, std::mt19937_64& rng,
                       const GradCheckOptions& opts) {
  std::vector<Leaf*> ptrs;
  for (auto& l : leaves) ptrs.push_back(l.get());
  auto r = projection_for(op, rng);
  return check_gradients(name, ptrs, weighted(std::move(op), r), opts);
}

std::shared_ptr<Leaf> leaf(std::string name, Matrix<double> m) {
  return std::make_shared<Leaf>(std::move(name), std::move(m));
}

std::vector<Case> make_cases() {
  std::vector<Case> cases;

  auto conv_case = [](std::string name, int k, int s, bool transposed, bool bias) {
    return Case{name, [=](const GradCheckOptions& opts) {
      std::mt19937_64 rng(opts.seed + 11);
      auto fine = random_coords(4, 0.5, 1, rng);
      auto coarse = build_coordinate_map(stride_coords(fine->coords(), 1, s), s);
      auto in = transposed ? coarse : fine;
      auto out = transposed ? fine : (s == 1 ? fine : coarse);
      auto kmap = build_kernel_map(*in, *out, k, transposed);
      const std::size_t c_in = 2, c_out = 3;
      auto x = leaf("x", random_matrix(in->size(), c_in, rng));
      auto w = leaf("w", random_matrix(static_cast<std::size_t>(k * k * k) * c_in, c_out, rng));
      auto b = leaf("b", random_matrix(1, c_out, rng));
      std::vector<std::shared_ptr<Leaf>> leaves{x, w};
      if (bias) leaves.push_back(b);
      return run_op(name, leaves, [=](ad::Tape<double>& t) {
        std::optional<ad::VarId> bv;
        if (bias) bv = t.parameter(*b);
        return ad::conv(t, t.parameter(*x), t.parameter(*w), bv, kmap);
      }, rng, opts);
    }};
  };
  cases.push_back(conv_case("conv", 3, 1, false, true));
  cases.push_back(conv_case("conv_strided", 2, 2, false, false));
  cases.push_back(conv_case("conv_transpose", 2, 2, true, false));

  auto norm_case = [](std::string name, bool layer, bool training) {
    return Case{name, [=](const GradCheckOptions& opts) {
      std::mt19937_64 rng(opts.seed + 23);
      auto x = leaf("x", random_matrix(9, 4, rng));
      auto g = leaf("gamma", random_matrix(1, 4, rng, 0.5, 1.5));
      auto b = leaf("beta", random_matrix(1, 4, rng));
      auto state = std::make_shared<nn::BatchNormState<double>>(4);
      for (auto& v : state->running_mean) v = 0.3;
      for (auto& v : state->running_var) v = 1.7;
      return run_op(name, {x, g, b}, [=](ad::Tape<double>& t) {
        if (layer) return ad::layer_norm(t, t.parameter(*x), t.parameter(*g), t.parameter(*b), 1e-6);
        return ad::batch_norm(t, t.parameter(*x), t.parameter(*g), t.parameter(*b), *state, training);
      }, rng, opts);
    }};
  };
  cases.push_back(norm_case("batch_norm", false, true));
  cases.push_back(norm_case("batch_norm_eval", false, false));
  cases.push_back(norm_case("layer_norm", true, false));

  auto unary_case = [](std::string name, bool gelu) {
    return Case{name, [=](const GradCheckOptions& opts) {
      std::mt19937_64 rng(opts.seed + 31);
      auto x = leaf("x", random_matrix(7, 5, rng, -2.0, 2.0));
      return run_op(name, {x}, [=](ad::Tape<double>& t) {
        return gelu ? ad::gelu(t, t.parameter(*x)) : ad::relu(t, t.parameter(*x));
      }, rng, opts);
    }};
  };
  cases.push_back(unary_case("relu", false));
  cases.push_back(unary_case("gelu", true));

  cases.push_back({"add", [](const GradCheckOptions& opts) {
    std::mt19937_64 rng(opts.seed + 41);
    auto a = leaf("a", random_matrix(6, 3, rng));
    auto b = leaf("b", random_matrix(6, 3, rng));
    return run_op("add", {a, b}, [=](ad::Tape<double>& t) {
      const auto av = t.parameter(*a);
      return ad::add(t, ad::add(t, av, t.parameter(*b)), av);
    }, rng, opts);
  }});
  cases.push_back({"concat", [](const GradCheckOptions& opts) {
    std::mt19937_64 rng(opts.seed + 43);
    auto a = leaf("a", random_matrix(6, 2, rng));
    auto b = leaf("b", random_matrix(6, 3, rng));
    return run_op("concat", {a, b}, [=](ad::Tape<double>& t) {
      return ad::concat(t, t.parameter(*a), t.parameter(*b));
    }, rng, opts);
  }});
  cases.push_back({"linear", [](const GradCheckOptions& opts) {
    std::mt19937_64 rng(opts.seed + 47);
    auto x = leaf("x", random_matrix(6, 4, rng));
    auto w = leaf("w", random_matrix(4, 3, rng));
    auto b = leaf("b", random_matrix(1, 3, rng));
    return run_op("linear", {x, w, b}, [=](ad::Tape<double>& t) {
      return ad::linear(t, t.parameter(*x), t.parameter(*w), t.parameter(*b));
    }, rng, opts);
  }});
  cases.push_back({"gem", [](const GradCheckOptions& opts) {
    std::mt19937_64 rng(opts.seed + 53);
    auto x = leaf("x", random_matrix(9, 4, rng, 0.1, 2.0));
    auto p = leaf("p", Matrix<double>(1, 1, 3.0));
    const nn::RowSegments segments{{0, 4}, {4, 9}};
    return run_op("gem", {x, p}, [=](ad::Tape<double>& t) {
      return ad::gem(t, t.parameter(*x), t.parameter(*p), segments, 1e-6);
    }, rng, opts);
  }});
  cases.push_back({"tsap_loss", [](const GradCheckOptions& opts) {
    std::mt19937_64 rng(opts.seed + 59);
    const std::size_t b = 10;
    std::vector<Utm> utm;
    for (std::size_t i = 0; i < b; ++i) utm.push_back({100.0 * static_cast<double>(i % 3), 3.0 * static_cast<double>(i % 2)});
    const PairLabels labels(utm, LabelConfig{});
    auto x = leaf("descriptors", random_matrix(b, 4, rng, 0.0, 0.03));
    LossConfig cfg;
    cfg.k = 2;
    cfg.batch_size = static_cast<int>(b);
    std::vector<Leaf*> ptrs{x.get()};
    return check_gradients("tsap_loss", ptrs, [=](ad::Tape<double>& t) {
      return ad::tsap_loss(t, t.parameter(*x), labels, cfg);
    }, opts);
  }});
  cases.push_back({"model", [](const GradCheckOptions& opts) {
    std::mt19937_64 rng(opts.seed + 61);
    ArchConfig cfg;
    cfg.encoder_channels = {2, 3, 3, 4};
    cfg.decoder_channels = {3, 3, 2};
    cfg.fc_dim = 4;
    auto model = std::make_shared<MinkUNeXt<double>>(cfg, opts.seed);
    // Points on a 20^3 patch of the voxel grid so neighbourhoods overlap at every stride.
    std::uniform_int_distribution<int> cell(0, 19);
    auto clouds = std::make_shared<std::vector<PointCloud>>(2);
    for (auto& c : *clouds)
      for (int i = 0; i < 120; ++i)
        c.points.push_back({0.01 * cell(rng) + 0.005, 0.01 * cell(rng) + 0.005, 0.01 * cell(rng) + 0.005});
    auto op = [=](ad::Tape<double>& t) { return model->forward(t, *clouds, true); };
    auto r = projection_for(op, rng);
    return check_gradients("model", model->parameters(), weighted(op, r), opts);
  }});
  return cases;
}

}  // namespace

std::vector<std::string> gradcheck_case_names() {
  std::vector<std::string> names;
  for (const auto& c : make_cases()) names.push_back(c.name);
  return names;
}

std::vector<GradCheckResult> run_gradcheck_suite(std::string_view only, const GradCheckOptions& opts) {
  std::vector<GradCheckResult> results;
  for (const auto& c : make_cases())
    if (only.empty() || c.name == only) results.push_back(c.run(opts));
  if (results.empty()) throw std::invalid_argument("unknown gradcheck case '" + std::string(only) + "'");
  return results;
}

}  // namespace minkunext::check
