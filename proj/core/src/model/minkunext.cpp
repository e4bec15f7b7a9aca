#include "minkunext/model/minkunext.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "minkunext/autodiff/ops.hpp"

namespace minkunext {

namespace {

template <typename T>
ad::NamedTensor to_named(const std::string& name, const Matrix<T>& m) {
  ad::NamedTensor t{name, {m.rows(), m.cols()}, {}};
  t.data.reserve(m.size());
  for (T v : m.flat()) t.data.push_back(static_cast<float>(v));
  return t;
}

template <typename T>
ad::NamedTensor to_named(const std::string& name, const std::vector<T>& v) {
  ad::NamedTensor t{name, {v.size()}, {}};
  for (T x : v) t.data.push_back(static_cast<float>(x));
  return t;
}

std::string strip_suffix(const std::string& name, std::string_view suffix) {
  return name.ends_with(suffix) ? name.substr(0, name.size() - suffix.size()) : name;
}

CoordinateMapPtr downsample(const CoordinateMapPtr& in, int factor) {
  if (factor == 1) return in;
  const int s = in->tensor_stride();
  return build_coordinate_map(stride_coords(in->coords(), s, s * factor), s * factor);
}

}  // namespace

template <typename T>
MinkUNeXt<T>::MinkUNeXt(const ArchConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  const auto& enc = cfg_.encoder_channels;
  const auto& dec = cfg_.decoder_channels;
  auto card = [&](std::size_t stage) { return static_cast<std::size_t>(cfg_.cardinalities.at(stage)); };

  stem_ = std::make_unique<ConvLayer<T>>("stem.conv", cfg_.stem_kernel, cfg_.stem_stride, false, 1,
                                         enc[0], false, rng);
  stem_norm_ = std::make_unique<NormLayer<T>>("stem.norm", NormKind::batch, enc[0], cfg_);

  std::size_t prev = enc[0];
  std::vector<std::size_t> skip_channels{prev};
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string name = "enc" + std::to_string(i);
    auto stage = std::unique_ptr<EncoderStage>(new EncoderStage{
        ConvLayer<T>(name + ".down", 2, 2, false, prev, prev, false, rng),
        NormLayer<T>(name + ".norm", NormKind::batch, prev, cfg_),
        {}});
    for (std::size_t j = 0; j < card(i); ++j) {
      const std::size_t c_in = j == 0 ? prev : enc[i];
      stage->blocks.push_back(std::make_unique<ResidualBlock<T>>(
          name + ".block" + std::to_string(j), cfg_, c_in, enc[i], rng));
    }
    prev = enc[i];
    skip_channels.push_back(prev);
    encoder_.push_back(std::move(stage));
  }

  for (std::size_t d = 0; d < dec.size(); ++d) {
    const std::string name = "dec" + std::to_string(d);
    const auto out = static_cast<std::size_t>(dec[d]);
    auto stage = std::unique_ptr<DecoderStage>(new DecoderStage{
        ConvLayer<T>(name + ".up", 2, 2, true, prev, out, false, rng),
        NormLayer<T>(name + ".norm", NormKind::batch, out, cfg_),
        {}});
    const std::size_t skip = skip_channels[3 - d];
    for (std::size_t j = 0; j < card(4 + d); ++j) {
      const std::size_t c_in = j == 0 ? out + skip : out;
      stage->blocks.push_back(std::make_unique<ResidualBlock<T>>(
          name + ".block" + std::to_string(j), cfg_, c_in, out, rng));
    }
    prev = out;
    decoder_.push_back(std::move(stage));
  }

  const auto fc = static_cast<std::size_t>(cfg_.fc_dim);
  Matrix<T> w(prev, fc);
  kaiming_uniform(w, prev, rng);
  fc_weight_ = std::make_unique<ad::Parameter<T>>("fc.weight", std::move(w));
  fc_bias_ = std::make_unique<ad::Parameter<T>>("fc.bias", Matrix<T>(1, fc));
  gem_p_ = std::make_unique<ad::Parameter<T>>("gem.p", Matrix<T>(1, 1, static_cast<T>(cfg_.gem_p_init)));
}

template <typename T>
ad::VarId MinkUNeXt<T>::forward(ad::Tape<T>& tape, std::span<const PointCloud> clouds, bool training) {
  if (clouds.empty()) throw std::invalid_argument("empty batch");
  std::vector<VoxelCoord> coords;
  for (std::size_t b = 0; b < clouds.size(); ++b) {
    auto c = quantize_coords(clouds[b], cfg_.quantization_size, static_cast<std::int32_t>(b));
    coords.insert(coords.end(), c.begin(), c.end());
  }
  auto input_map = build_coordinate_map(std::move(coords), 1);

  ForwardContext<T> ctx{tape, training, {}};
  encoder_maps_.clear();
  decoder_maps_.clear();

  ad::VarId x = tape.constant(Matrix<T>(input_map->size(), 1, T(1)));
  auto map = downsample(input_map, cfg_.stem_stride);
  x = apply_conv(ctx, *stem_, x, input_map, map);
  x = ad::relu(tape, apply_norm(ctx, *stem_norm_, x));
  encoder_maps_.push_back(map);
  std::vector<ad::VarId> skips{x};

  for (auto& stage : encoder_) {
    auto out_map = downsample(map, 2);
    x = apply_conv(ctx, stage->down, x, map, out_map);
    x = ad::relu(tape, apply_norm(ctx, stage->norm, x));
    for (auto& block : stage->blocks) x = block->forward(ctx, x, out_map);
    map = out_map;
    encoder_maps_.push_back(map);
    skips.push_back(x);
  }

  for (std::size_t d = 0; d < decoder_.size(); ++d) {
    auto& stage = *decoder_[d];
    const auto& out_map = encoder_maps_[3 - d];
    x = apply_conv(ctx, stage.up, x, map, out_map);
    x = ad::relu(tape, apply_norm(ctx, stage.norm, x));
    x = ad::concat(tape, x, skips[3 - d]);
    for (auto& block : stage.blocks) x = block->forward(ctx, x, out_map);
    map = out_map;
    decoder_maps_.push_back(map);
  }

  x = ad::linear(tape, x, tape.parameter(*fc_weight_), tape.parameter(*fc_bias_));
  return ad::gem(tape, x, tape.parameter(*gem_p_), map->batch_segments(clouds.size()),
                 static_cast<T>(cfg_.gem_eps));
}

template <typename T>
Matrix<T> MinkUNeXt<T>::embed(std::span<const PointCloud> clouds, std::size_t chunk) {
  if (clouds.empty()) throw std::invalid_argument("empty batch");
  chunk = std::max<std::size_t>(chunk, 1);
  Matrix<T> out(clouds.size(), static_cast<std::size_t>(cfg_.fc_dim));
  for (std::size_t begin = 0; begin < clouds.size(); begin += chunk) {
    const std::size_t n = std::min(chunk, clouds.size() - begin);
    ad::Tape<T> tape(false);
    const auto& desc = tape.value(forward(tape, clouds.subspan(begin, n), false));
    std::copy(desc.flat().begin(), desc.flat().end(), out.row(begin).begin());
  }
  return out;
}

template <typename T>
std::vector<ad::Parameter<T>*> MinkUNeXt<T>::parameters() {
  std::vector<ad::Parameter<T>*> out{&stem_->weight, &stem_norm_->gamma, &stem_norm_->beta};
  for (auto& stage : encoder_) {
    out.insert(out.end(), {&stage->down.weight, &stage->norm.gamma, &stage->norm.beta});
    for (auto& b : stage->blocks) b->collect_parameters(out);
  }
  for (auto& stage : decoder_) {
    out.insert(out.end(), {&stage->up.weight, &stage->norm.gamma, &stage->norm.beta});
    for (auto& b : stage->blocks) b->collect_parameters(out);
  }
  out.insert(out.end(), {fc_weight_.get(), fc_bias_.get(), gem_p_.get()});
  return out;
}

template <typename T>
std::size_t MinkUNeXt<T>::parameter_count() const {
  std::size_t n = 0;
  for (auto* p : const_cast<MinkUNeXt*>(this)->parameters()) n += p->value.size();
  return n;
}

template <typename T>
void MinkUNeXt<T>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename T>
void MinkUNeXt<T>::clamp_parameters() {
  T& p = gem_p_->value(0, 0);
  if (!(p >= T(1))) p = T(1);
}

template <typename T>
std::size_t MinkUNeXt<T>::residual_block_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : encoder_) n += s->blocks.size();
  for (const auto& s : decoder_) n += s->blocks.size();
  return n;
}

template <typename T>
std::vector<ResidualBlock<T>*> MinkUNeXt<T>::blocks() {
  std::vector<ResidualBlock<T>*> out;
  for (auto& s : encoder_)
    for (auto& b : s->blocks) out.push_back(b.get());
  for (auto& s : decoder_)
    for (auto& b : s->blocks) out.push_back(b.get());
  return out;
}

template <typename T>
int MinkUNeXt<T>::output_stride() const noexcept {
  return cfg_.stem_stride * 16 >> static_cast<int>(decoder_.size());
}

template <typename T>
void MinkUNeXt<T>::collect_norms(std::vector<NormLayer<T>*>& out) {
  out.push_back(stem_norm_.get());
  for (auto& s : encoder_) {
    out.push_back(&s->norm);
    for (auto& b : s->blocks) b->collect_norms(out);
  }
  for (auto& s : decoder_) {
    out.push_back(&s->norm);
    for (auto& b : s->blocks) b->collect_norms(out);
  }
}

template <typename T>
std::vector<ad::NamedTensor> MinkUNeXt<T>::state_dict() {
  std::vector<ad::NamedTensor> out;
  for (auto* p : parameters()) out.push_back(to_named(p->name, p->value));
  std::vector<NormLayer<T>*> norms;
  collect_norms(norms);
  for (auto* n : norms) {
    if (n->kind != NormKind::batch) continue;
    const std::string base = strip_suffix(n->gamma.name, ".gamma");
    out.push_back(to_named(base + ".running_mean", n->state.running_mean));
    out.push_back(to_named(base + ".running_var", n->state.running_var));
  }
  return out;
}

template <typename T>
void MinkUNeXt<T>::load_state_dict(const std::vector<ad::NamedTensor>& tensors) {
  auto lookup = [&](const std::string& name, std::size_t expected) -> const ad::NamedTensor& {
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const auto& t) { return t.name == name; });
    if (it == tensors.end()) throw std::runtime_error("missing tensor " + name);
    if (it->data.size() != expected) throw std::runtime_error("shape mismatch for tensor " + name);
    return *it;
  };
  for (auto* p : parameters()) {
    const auto& t = lookup(p->name, p->value.size());
    std::transform(t.data.begin(), t.data.end(), p->value.data(), [](float v) { return static_cast<T>(v); });
  }
  std::vector<NormLayer<T>*> norms;
  collect_norms(norms);
  for (auto* n : norms) {
    if (n->kind != NormKind::batch) continue;
    const std::string base = strip_suffix(n->gamma.name, ".gamma");
    auto load = [&](const std::string& name, std::vector<T>& dst) {
      const auto& t = lookup(name, dst.size());
      std::transform(t.data.begin(), t.data.end(), dst.begin(), [](float v) { return static_cast<T>(v); });
    };
    load(base + ".running_mean", n->state.running_mean);
    load(base + ".running_var", n->state.running_var);
  }
}

template <typename T>
ad::Checkpoint MinkUNeXt<T>::to_checkpoint() {
  ad::Checkpoint ckpt;
  ckpt.metadata = to_json(cfg_);
  ckpt.tensors = state_dict();
  return ckpt;
}

template <typename T>
MinkUNeXt<T> MinkUNeXt<T>::from_checkpoint(const ad::Checkpoint& ckpt) {
  MinkUNeXt model(arch_config_from_json(ckpt.metadata), 0);
  model.load_state_dict(ckpt.tensors);
  return model;
}

template class MinkUNeXt<float>;
template class MinkUNeXt<double>;

}  // namespace minkunext
