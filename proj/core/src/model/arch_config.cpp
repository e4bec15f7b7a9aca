#include "minkunext/model/arch_config.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace minkunext {

namespace {

using nlohmann::json;

template <typename E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<std::string_view, E>> table) {
  for (const auto& [name, value] : table)
    if (name == s) return value;
  throw std::invalid_argument("unknown enum value '" + s + "'");
}

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

std::string_view to_string(BlockVariant v) {
  switch (v) {
    case BlockVariant::resnet: return "resnet";
    case BlockVariant::bottleneck: return "bottleneck";
    case BlockVariant::inverted_bottleneck: return "inverted_bottleneck";
  }
  return "?";
}
std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "gelu"; }
std::string_view to_string(NormKind n) { return n == NormKind::batch ? "batch" : "layer"; }
std::string_view to_string(BlockOrder o) { return o == BlockOrder::convnext ? "convnext" : "norm_act_each"; }

void ArchConfig::validate() const {
  for (int c : encoder_channels) require(c > 0, "encoder channels must be positive");
  require(num_skips >= 2 && num_skips <= 4, "num_skips must be 2, 3 or 4");
  require(decoder_channels.size() == static_cast<std::size_t>(num_skips),
          "inconsistent channel chain: decoder stage count must equal num_skips");
  for (int c : decoder_channels) require(c > 0, "decoder channels must be positive");
  require(cardinalities.size() == 4 + static_cast<std::size_t>(num_skips),
          "cardinalities must list 4 encoder plus num_skips decoder stages");
  for (int c : cardinalities) require(c >= 1, "cardinalities must be >= 1");
  require(stem_kernel >= 1 && stem_stride >= 1, "stem kernel and stride must be positive");
  for (int k : block_kernel_sizes) require(k >= 1, "block kernel sizes must be positive");
  require(fc_dim >= 1, "fc_dim must be positive");
  require(gem_p_init >= 1.0, "GeM exponent must be >= 1");
  require(gem_eps > 0.0 && bn_eps > 0.0 && ln_eps > 0.0, "normalization eps must be positive");
  require(bn_momentum > 0.0 && bn_momentum < 1.0, "batch-norm momentum must lie in (0, 1)");
  require(quantization_size > 0.0, "quantization size must be positive");
}

int ArchConfig::residual_block_count() const {
  return std::accumulate(cardinalities.begin(), cardinalities.end(), 0);
}

std::string to_json(const ArchConfig& c) {
  json j;
  j["encoder_channels"] = c.encoder_channels;
  j["decoder_channels"] = c.decoder_channels;
  j["stem"] = {{"kernel_size", c.stem_kernel}, {"stride", c.stem_stride}};
  j["num_skips"] = c.num_skips;
  j["cardinalities"] = c.cardinalities;
  j["block_variant"] = to_string(c.block_variant);
  j["block_activation"] = to_string(c.block_activation);
  j["block_norm_main"] = to_string(c.block_norm_main);
  j["block_kernel_sizes"] = c.block_kernel_sizes;
  j["block_order"] = to_string(c.block_order);
  j["fc_dim"] = c.fc_dim;
  j["gem_p_init"] = c.gem_p_init;
  j["gem_eps"] = c.gem_eps;
  j["bn_momentum"] = c.bn_momentum;
  j["bn_eps"] = c.bn_eps;
  j["ln_eps"] = c.ln_eps;
  j["quantization_size"] = c.quantization_size;
  return j.dump(2);
}

ArchConfig arch_config_from_json(std::string_view text) {
  const json j = json::parse(text);
  ArchConfig c;
  if (j.contains("encoder_channels")) {
    const auto enc = j.at("encoder_channels").get<std::vector<int>>();
    require(enc.size() == 4, "encoder_channels must have 4 entries");
    std::copy(enc.begin(), enc.end(), c.encoder_channels.begin());
  }
  if (j.contains("decoder_channels")) c.decoder_channels = j.at("decoder_channels").get<std::vector<int>>();
  if (j.contains("stem")) {
    c.stem_kernel = j.at("stem").value("kernel_size", c.stem_kernel);
    c.stem_stride = j.at("stem").value("stride", c.stem_stride);
  }
  c.num_skips = j.value("num_skips", c.num_skips);
  if (j.contains("cardinalities")) {
    c.cardinalities = j.at("cardinalities").get<std::vector<int>>();
  } else {
    c.cardinalities.assign(4 + static_cast<std::size_t>(c.num_skips), 1);
  }
  if (j.contains("block_variant"))
    c.block_variant = parse_enum<BlockVariant>(j.at("block_variant").get<std::string>(),
                                               {{"resnet", BlockVariant::resnet},
                                                {"bottleneck", BlockVariant::bottleneck},
                                                {"inverted_bottleneck", BlockVariant::inverted_bottleneck}});
  if (j.contains("block_activation"))
    c.block_activation = parse_enum<Activation>(j.at("block_activation").get<std::string>(),
                                                {{"relu", Activation::relu}, {"gelu", Activation::gelu}});
  if (j.contains("block_norm_main"))
    c.block_norm_main = parse_enum<NormKind>(j.at("block_norm_main").get<std::string>(),
                                             {{"batch", NormKind::batch}, {"layer", NormKind::layer}});
  if (j.contains("block_kernel_sizes")) {
    const auto k = j.at("block_kernel_sizes").get<std::vector<int>>();
    require(k.size() == 3, "block_kernel_sizes must have 3 entries");
    std::copy(k.begin(), k.end(), c.block_kernel_sizes.begin());
  }
  if (j.contains("block_order"))
    c.block_order = parse_enum<BlockOrder>(j.at("block_order").get<std::string>(),
                                           {{"convnext", BlockOrder::convnext},
                                            {"norm_act_each", BlockOrder::norm_act_each}});
  c.fc_dim = j.value("fc_dim", c.fc_dim);
  c.gem_p_init = j.value("gem_p_init", c.gem_p_init);
  c.gem_eps = j.value("gem_eps", c.gem_eps);
  c.bn_momentum = j.value("bn_momentum", c.bn_momentum);
  c.bn_eps = j.value("bn_eps", c.bn_eps);
  c.ln_eps = j.value("ln_eps", c.ln_eps);
  c.quantization_size = j.value("quantization_size", c.quantization_size);
  c.validate();
  return c;
}

ArchConfig load_arch_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return arch_config_from_json(ss.str());
}

ArchConfig scale_channels(ArchConfig cfg, int divisor) {
  if (divisor < 1) throw std::invalid_argument("channel divisor must be >= 1");
  for (int& c : cfg.encoder_channels) c = std::max(1, c / divisor);
  for (int& c : cfg.decoder_channels) c = std::max(1, c / divisor);
  cfg.fc_dim = std::max(1, cfg.fc_dim / divisor);
  return cfg;
}

ArchConfig desk_arch_config() {
  ArchConfig cfg = scale_channels(ArchConfig{}, 4);
  cfg.validate();
  return cfg;
}

}  // namespace minkunext
