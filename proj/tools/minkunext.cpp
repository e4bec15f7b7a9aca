#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "minkunext/check/dense_oracle.hpp"
#include "minkunext/check/gradcheck.hpp"
#include "minkunext/eval/descriptor_db.hpp"
#include "minkunext/eval/protocol.hpp"
#include "minkunext/model/ablation.hpp"
#include "minkunext/model/minkunext.hpp"
#include "minkunext/train/config.hpp"
#include "minkunext/train/dataset.hpp"
#include "minkunext/train/synthetic.hpp"
#include "minkunext/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace minkunext;

namespace {

struct SynthArgs {
  int places = 64;
  int variants = 10;
  int points = 4096;
  int test_variants = 2;
  std::uint64_t seed = 0;
  fs::path out;
};

struct TrainArgs {
  fs::path config;
  fs::path data;
  fs::path out;
  fs::path log;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_epochs;
};

struct EmbedArgs {
  fs::path ckpt;
  fs::path data;
  fs::path out;
  std::string split = "all";
};

struct EvalArgs {
  fs::path ckpt;
  fs::path data;
  std::string protocol = "baseline";
  fs::path report;
};

struct GradArgs {
  std::string op;
  std::uint64_t seed = 0;
};

struct OracleArgs {
  int grid = 7;
  std::vector<int> kernels{1, 2, 3, 5};
  std::vector<int> strides{1, 2};
  int trials = 200;
  std::uint64_t seed = 0;
};

struct AblateArgs {
  std::string step;
  fs::path config;
  bool list = false;
  int channel_divisor = 4;
  int places = 64;
  int variants = 10;
  int points = 512;
  std::uint64_t seed = 0;
};

MinkUNeXt<float> load_model(const fs::path& ckpt) {
  return MinkUNeXt<float>::from_checkpoint(ad::load_checkpoint(ckpt));
}

void print_epoch(const EpochMetrics& m) {
  std::printf("epoch %3d  lr %.2e  loss %.5f", m.epoch + 1, m.lr, m.loss);
  if (!std::isnan(m.val_ar_at_1)) std::printf("  val AR@1 %.3f", m.val_ar_at_1);
  std::printf("\n");
  std::fflush(stdout);
}

int run_synth(const SynthArgs& a) {
  SyntheticConfig cfg;
  cfg.places = a.places;
  cfg.variants = a.variants;
  cfg.points = a.points;
  cfg.test_variants = a.test_variants;
  std::mt19937_64 rng(a.seed);
  const Dataset ds = generate_synthetic(cfg, rng);
  save_dataset(a.out, ds);
  std::printf("wrote %zu submaps to %s\n", ds.size(), a.out.string().c_str());
  return 0;
}

int run_train(const TrainArgs& a) {
  const TrainConfig cfg = load_train_config(a.config);
  const Dataset ds = load_dataset(a.data);
  TrainOptions opts;
  opts.checkpoint = a.out;
  opts.metrics_log = a.log.empty() ? fs::path(a.out.string() + ".metrics.csv") : a.log;
  opts.on_epoch = print_epoch;
  opts.max_epochs = a.max_epochs;
  const std::uint64_t seed = a.seed.value_or(cfg.seeds.empty() ? 0 : cfg.seeds.front());
  const auto t0 = std::chrono::steady_clock::now();
  train(cfg, ds, seed, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("checkpoint %s, metrics %s, %.1f s\n", a.out.string().c_str(), opts.metrics_log->string().c_str(),
              secs);
  return 0;
}

int run_embed(const EmbedArgs& a) {
  auto model = load_model(a.ckpt);
  const Dataset ds = load_dataset(a.data);
  const auto records = a.split == "all" ? ds.records : ds.select(split_from_string(a.split));
  const DescriptorDB db = embed_dataset(model, records);
  save_descriptor_db(a.out, db);
  std::printf("wrote %zu x %zu descriptors to %s\n", db.size(), db.dim(), a.out.string().c_str());
  return 0;
}

int run_eval(const EvalArgs& a) {
  auto model = load_model(a.ckpt);
  const Dataset ds = load_dataset(a.data);
  const RecallReport report = evaluate_protocol(model, ds, protocol_from_string(a.protocol));
  std::cout << report.to_table();
  if (!a.report.empty()) {
    std::ofstream os(a.report);
    if (!os) throw std::runtime_error("cannot write " + a.report.string());
    os << report.to_csv();
  }
  return 0;
}

int run_gradcheck(const GradArgs& a) {
  check::GradCheckOptions opts;
  opts.seed = a.seed;
  const auto results = check::run_gradcheck_suite(a.op, opts);
  bool ok = !results.empty();
  for (const auto& r : results) {
    std::printf("%-16s %s  compared %4zu  kinks %zu  failures %zu  max rel err %.2e\n", r.name.c_str(),
                r.passed() ? "ok  " : "FAIL", r.compared, r.kinks, r.failures, r.max_rel_error);
    ok = ok && r.passed();
  }
  return ok ? 0 : 1;
}

int run_oracle(const OracleArgs& a) {
  check::OracleTrialConfig cfg;
  cfg.max_grid = a.grid;
  cfg.kernels = a.kernels;
  cfg.strides = a.strides;
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  const auto rep = check::run_dense_oracle(cfg);
  std::printf("%d/%d trials match  max err double %.2e  float %.2e\n", rep.passed, rep.trials,
              rep.max_error_double, rep.max_error_float);
  for (const auto& f : rep.failures) std::printf("  %s\n", f.c_str());
  return rep.ok() ? 0 : 1;
}

std::size_t parameter_count(const ArchConfig& arch) { return MinkUNeXt<float>(arch, 0).parameter_count(); }

int run_ablate(const AblateArgs& a) {
  if (a.list) {
    for (const auto& s : ablation_steps())
      std::printf("%-5s %-5s %+d  %s\n", s.id.c_str(), s.parent.empty() ? "-" : s.parent.c_str(),
                  s.expected_param_direction, s.description.c_str());
    return 0;
  }
  const AblationStep& step = ablation_step(a.step);
  const std::size_t params = parameter_count(step.config);
  std::printf("step %s: %s\n", step.id.c_str(), step.description.c_str());
  std::printf("parameters %zu\n", params);
  if (!step.parent.empty()) {
    const std::size_t parent = parameter_count(ablation_step(step.parent).config);
    const long long delta = static_cast<long long>(params) - static_cast<long long>(parent);
    const int dir = (delta > 0) - (delta < 0);
    std::printf("parent %s: %zu (%+lld, expected direction %+d)\n", step.parent.c_str(), parent, delta,
                step.expected_param_direction);
    if (dir != step.expected_param_direction) std::printf("warning: unexpected direction of change\n");
  }
  if (a.config.empty()) return 0;

  TrainConfig cfg = load_train_config(a.config);
  ArchConfig arch = scale_channels(step.config, a.channel_divisor);
  arch.quantization_size = cfg.arch.quantization_size;
  cfg.arch = arch;
  cfg.train_regions = {"synthetic"};
  SyntheticConfig synth;
  synth.places = a.places;
  synth.variants = a.variants;
  synth.points = a.points;
  std::mt19937_64 rng(a.seed);
  const Dataset ds = generate_synthetic(synth, rng);
  TrainOptions opts;
  opts.on_epoch = print_epoch;
  auto result = train(cfg, ds, cfg.seeds.empty() ? 0 : cfg.seeds.front(), opts);
  std::printf("desk-scale model: %zu parameters\n", result.model.parameter_count());
  std::cout << evaluate_protocol(result.model, ds, cfg.protocol, cfg.labels).to_table();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse 3D convolution place recognition: data, training, evaluation and self-checks"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth-gen", "Generate a synthetic place-recognition dataset");
  s->add_option("--places", synth.places, "Number of places")->capture_default_str();
  s->add_option("--variants", synth.variants, "Submaps per place")->capture_default_str();
  s->add_option("--points", synth.points, "Points per submap")->capture_default_str();
  s->add_option("--test-variants", synth.test_variants, "Variants per place held out for testing")
      ->capture_default_str();
  s->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  s->add_option("--out", synth.out, "Output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model and write a checkpoint");
  t->add_option("--config", tr.config, "Training config (JSON)")->required()->check(CLI::ExistingFile);
  t->add_option("--data", tr.data, "Dataset directory with index.csv")->required()->check(CLI::ExistingDirectory);
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--log", tr.log, "Metrics CSV (default: <out>.metrics.csv)");
  t->add_option("--seed", tr.seed, "Override the first configured seed");
  t->add_option("--max-epochs", tr.max_epochs, "Stop early, keeping the configured schedule");

  EmbedArgs em;
  auto* e = app.add_subcommand("embed", "Write the descriptor database of a dataset");
  e->add_option("--ckpt", em.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  e->add_option("--data", em.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--out", em.out, "Descriptor database file")->required();
  e->add_option("--split", em.split, "Records to embed")
      ->check(CLI::IsMember({"all", "train", "test"}))
      ->capture_default_str();

  EvalArgs ev;
  auto* v = app.add_subcommand("eval", "AR@1 / AR@1% over ordered run pairs of the test split");
  v->add_option("--ckpt", ev.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  v->add_option("--data", ev.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  v->add_option("--protocol", ev.protocol, "Evaluation protocol")
      ->check(CLI::IsMember({"baseline", "refined"}))
      ->capture_default_str();
  v->add_option("--report", ev.report, "Delimited report output");

  GradArgs gr;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  g->add_option("--op", gr.op, "Run a single case")->check(CLI::IsMember(check::gradcheck_case_names()));
  g->add_option("--seed", gr.seed, "Random seed")->capture_default_str();

  OracleArgs orc;
  auto* o = app.add_subcommand("oraclecheck", "Sparse vs dense convolution equivalence suite");
  o->add_option("--grid", orc.grid, "Largest grid edge")->capture_default_str()->check(CLI::Range(1, 32));
  o->add_option("--kernel", orc.kernels, "Kernel sizes to sample from")->capture_default_str();
  o->add_option("--stride", orc.strides, "Strides to sample from")->capture_default_str();
  o->add_option("--trials", orc.trials, "Number of random trials")->capture_default_str();
  o->add_option("--seed", orc.seed, "Random seed")->capture_default_str();

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "Build a design-progress variant; with --config also train it");
  a->add_option("--step", ab.step, "Variant id, G1.1 .. R5.3");
  a->add_option("--config", ab.config, "Training config for the desk-scale run")->check(CLI::ExistingFile);
  a->add_flag("--list", ab.list, "List all variants");
  a->add_option("--channel-divisor", ab.channel_divisor, "Channel reduction for training")->capture_default_str();
  a->add_option("--places", ab.places, "Synthetic places")->capture_default_str();
  a->add_option("--variants", ab.variants, "Synthetic submaps per place")->capture_default_str();
  a->add_option("--points", ab.points, "Synthetic points per submap")->capture_default_str();
  a->add_option("--seed", ab.seed, "Dataset seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*s) return run_synth(synth);
    if (*t) return run_train(tr);
    if (*e) return run_embed(em);
    if (*v) return run_eval(ev);
    if (*g) return run_gradcheck(gr);
    if (*o) return run_oracle(orc);
    if (*a) {
      if (ab.step.empty() && !ab.list) throw CLI::RequiredError("--step");
      return run_ablate(ab);
    }
  } catch (const CLI::Error& err) {
    return app.exit(err);
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  }
  return 0;
}
