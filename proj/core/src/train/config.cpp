#include "minkunext/train/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace minkunext {

using json = nlohmann::json;

std::string_view to_string(Protocol p) { return p == Protocol::baseline ? "baseline" : "refined"; }

Protocol protocol_from_string(std::string_view s) {
  if (s == "baseline") return Protocol::baseline;
  if (s == "refined") return Protocol::refined;
  throw std::invalid_argument("unknown protocol '" + std::string(s) + "'");
}

std::vector<std::string> protocol_train_regions(Protocol p) {
  if (p == Protocol::baseline) return {"oxford"};
  return {"oxford", "us", "ra"};
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be non-negative");
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (eval_every < 0) throw std::invalid_argument("eval_every must be non-negative");
  schedule().validate();
  loss.validate();
  labels.validate();
  augment.validate();
  arch.validate();
}

ad::LrSchedule TrainConfig::schedule() const { return {initial_lr, milestones, lr_factor}; }

std::vector<std::string> TrainConfig::effective_train_regions() const {
  return train_regions.empty() ? protocol_train_regions(protocol) : train_regions;
}

TrainConfig baseline_train_config() {
  TrainConfig cfg;
  cfg.loss.batch_size = 2048;
  return cfg;
}

TrainConfig refined_train_config() {
  TrainConfig cfg = baseline_train_config();
  cfg.protocol = Protocol::refined;
  cfg.epochs = 500;
  cfg.milestones = {350, 450};
  return cfg;
}

TrainConfig desk_train_config() {
  TrainConfig cfg = baseline_train_config();
  cfg.train_regions = {"synthetic"};
  cfg.epochs = 50;
  cfg.milestones = {35, 45};
  cfg.loss.batch_size = 64;
  cfg.arch = desk_arch_config();
  cfg.arch.quantization_size = 0.04;
  cfg.eval_every = 10;
  return cfg;
}

std::string to_json(const TrainConfig& c) {
  json j;
  j["protocol"] = to_string(c.protocol);
  j["train_regions"] = c.train_regions;
  j["epochs"] = c.epochs;
  j["milestones"] = c.milestones;
  j["initial_lr"] = c.initial_lr;
  j["lr_factor"] = c.lr_factor;
  j["weight_decay"] = c.weight_decay;
  j["loss"] = {{"tau", c.loss.tau}, {"k", c.loss.k}, {"batch_size", c.loss.batch_size}};
  j["labels"] = {{"positive_radius", c.labels.positive_radius},
                 {"negative_radius", c.labels.negative_radius},
                 {"success_radius", c.labels.success_radius}};
  j["augment"] = {{"jitter_max", c.augment.jitter_max},
                  {"global_shift_max", c.augment.global_shift_max},
                  {"drop_fraction", c.augment.drop_fraction}};
  j["seeds"] = c.seeds;
  j["arch"] = json::parse(to_json(c.arch));
  j["eval_every"] = c.eval_every;
  j["embed_chunk"] = c.embed_chunk;
  return j.dump(2);
}

TrainConfig train_config_from_json(std::string_view text) {
  const json j = json::parse(text);
  TrainConfig c;
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset == "baseline") c = baseline_train_config();
    else if (preset == "refined") c = refined_train_config();
    else if (preset == "desk") c = desk_train_config();
    else throw std::invalid_argument("unknown preset '" + preset + "'");
  }
  if (j.contains("protocol")) c.protocol = protocol_from_string(j.at("protocol").get<std::string>());
  if (j.contains("train_regions")) c.train_regions = j.at("train_regions").get<std::vector<std::string>>();
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
  if (j.contains("milestones")) c.milestones = j.at("milestones").get<std::vector<int>>();
  if (j.contains("initial_lr")) c.initial_lr = j.at("initial_lr").get<double>();
  if (j.contains("lr_factor")) c.lr_factor = j.at("lr_factor").get<double>();
  if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    c.loss.tau = l.value("tau", c.loss.tau);
    c.loss.k = l.value("k", c.loss.k);
    c.loss.batch_size = l.value("batch_size", c.loss.batch_size);
  }
  if (j.contains("labels")) {
    const auto& l = j.at("labels");
    c.labels.positive_radius = l.value("positive_radius", c.labels.positive_radius);
    c.labels.negative_radius = l.value("negative_radius", c.labels.negative_radius);
    c.labels.success_radius = l.value("success_radius", c.labels.success_radius);
  }
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    c.augment.jitter_max = a.value("jitter_max", c.augment.jitter_max);
    c.augment.global_shift_max = a.value("global_shift_max", c.augment.global_shift_max);
    c.augment.drop_fraction = a.value("drop_fraction", c.augment.drop_fraction);
  }
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("arch")) c.arch = arch_config_from_json(j.at("arch").dump());
  if (j.contains("eval_every")) c.eval_every = j.at("eval_every").get<int>();
  if (j.contains("embed_chunk")) c.embed_chunk = j.at("embed_chunk").get<std::size_t>();
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return train_config_from_json(ss.str());
}

std::vector<double> lr_sequence(const TrainConfig& cfg) {
  const auto sched = cfg.schedule();
  sched.validate();
  std::vector<double> out;
  for (int e = 0; e < cfg.epochs; ++e) out.push_back(sched.lr_at(e));
  return out;
}

}  // namespace minkunext
