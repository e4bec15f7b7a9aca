#include "minkunext/train/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "minkunext/autodiff/checkpoint.hpp"
#include "minkunext/eval/recall.hpp"
#include "minkunext/train/sampler.hpp"

namespace minkunext {

namespace {

ad::NamedTensor named(const std::string& name, const Matrix<float>& m) {
  return {name, {m.rows(), m.cols()}, std::vector<float>(m.flat().begin(), m.flat().end())};
}

ad::OptimizerSnapshot snapshot(const ad::Adam<float>& adam) {
  ad::OptimizerSnapshot s;
  const auto& c = adam.config();
  s.step = adam.step_count();
  s.lr = c.lr;
  s.beta1 = c.beta1;
  s.beta2 = c.beta2;
  s.eps = c.eps;
  s.weight_decay = c.weight_decay;
  for (std::size_t i = 0; i < adam.params().size(); ++i) {
    s.first_moments.push_back(named(adam.params()[i]->name, adam.first_moments()[i]));
    s.second_moments.push_back(named(adam.params()[i]->name, adam.second_moments()[i]));
  }
  return s;
}

double validation_recall(MinkUNeXt<float>& model, const std::vector<SubmapRecord>& val, const TrainConfig& cfg) {
  if (val.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    return evaluate_descriptors(embed_dataset(model, val, cfg.embed_chunk), cfg.labels).mean_ar_at_1;
  } catch (const std::invalid_argument&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& data, std::uint64_t seed, const TrainOptions& options) {
  cfg.validate();
  const auto regions = cfg.effective_train_regions();
  const auto train_set = data.select(Split::train, regions);
  const auto val_set = data.select(Split::test, regions);
  if (train_set.empty()) throw std::invalid_argument("no training records for the configured regions");
  const PairLabels labels = label_pairs(train_set, cfg.labels);

  TrainResult result{MinkUNeXt<float>(cfg.arch, seed), {}};
  auto& model = result.model;
  ad::Adam<float> adam(model.parameters(), {cfg.initial_lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  const auto schedule = cfg.schedule();
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);

  std::ofstream log;
  if (options.metrics_log) {
    const bool fresh = !std::filesystem::exists(*options.metrics_log);
    log.open(*options.metrics_log, std::ios::app);
    if (!log) throw std::runtime_error("cannot open metrics log " + options.metrics_log->string());
    if (fresh) log << "epoch,lr,loss,val_AR@1\n";
    log.precision(10);
  }

  const int epochs = options.max_epochs ? std::min(*options.max_epochs, cfg.epochs) : cfg.epochs;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double lr = schedule.lr_at(epoch);
    adam.set_lr(lr);
    const auto batches = sample_epoch(labels, cfg.loss, rng);
    double loss_sum = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& batch = batches[bi];
      std::vector<PointCloud> clouds;
      clouds.reserve(batch.size());
      for (std::size_t i : batch) clouds.push_back(augment(train_set[i].cloud, cfg.augment, rng));

      ad::Tape<float> tape(true);
      const ad::VarId desc = model.forward(tape, clouds, true);
      const ad::VarId loss = ad::tsap_loss(tape, desc, labels.subset(batch), cfg.loss);
      const double value = tape.value(loss)(0, 0);
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << ", batch " << bi;
        throw std::runtime_error(msg.str());
      }
      model.zero_grad();
      tape.backward(loss);
      adam.step();
      model.clamp_parameters();
      loss_sum += value;
    }

    EpochMetrics m{epoch, lr, loss_sum / static_cast<double>(batches.size()),
                   std::numeric_limits<double>::quiet_NaN()};
    const bool last = epoch + 1 == epochs;
    if (cfg.eval_every > 0 && ((epoch + 1) % cfg.eval_every == 0 || last))
      m.val_ar_at_1 = validation_recall(model, val_set, cfg);
    result.history.push_back(m);
    if (log.is_open()) {
      log << m.epoch << ',' << m.lr << ',' << m.loss << ',';
      if (!std::isnan(m.val_ar_at_1)) log << m.val_ar_at_1;
      log << '\n' << std::flush;
    }
    if (options.on_epoch) options.on_epoch(m);
  }

  if (options.checkpoint) {
    auto ckpt = model.to_checkpoint();
    ckpt.optimizer = snapshot(adam);
    ad::save_checkpoint(*options.checkpoint, ckpt);
  }
  return result;
}

}  // namespace minkunext
