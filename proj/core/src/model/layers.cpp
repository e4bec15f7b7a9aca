#include "minkunext/model/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "minkunext/autodiff/ops.hpp"

namespace minkunext {

template <typename T>
void kaiming_uniform(Matrix<T>& m, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : m.flat()) v = static_cast<T>(dist(rng));
}

template <typename T>
ConvLayer<T>::ConvLayer(std::string name, int k, int s, bool transposed_, std::size_t c_in,
                        std::size_t c_out, bool with_bias, std::mt19937_64& rng)
    : kernel_size(k), stride(s), transposed(transposed_), in_channels(c_in), out_channels(c_out) {
  if (k < 1 || s < 1 || c_in == 0 || c_out == 0) throw std::invalid_argument("invalid convolution shape");
  const auto volume = static_cast<std::size_t>(k) * k * k;
  Matrix<T> w(volume * c_in, c_out);
  kaiming_uniform(w, volume * c_in, rng);
  weight = ad::Parameter<T>(name + ".weight", std::move(w));
  if (with_bias) bias.emplace(name + ".bias", Matrix<T>(1, c_out));
}

template <typename T>
NormLayer<T>::NormLayer(std::string name, NormKind kind_, std::size_t channels, const ArchConfig& cfg)
    : kind(kind_),
      gamma(name + ".gamma", Matrix<T>(1, channels, T(1))),
      beta(name + ".beta", Matrix<T>(1, channels, T(0))),
      state(kind_ == NormKind::batch ? nn::BatchNormState<T>(channels, cfg.bn_momentum, cfg.bn_eps)
                                     : nn::BatchNormState<T>()),
      ln_eps(cfg.ln_eps) {}

KernelMapPtr KernelMapCache::get(const CoordinateMapPtr& in, const CoordinateMapPtr& out,
                                 int kernel_size, bool transposed) {
  for (const auto& e : entries_)
    if (e.in == in.get() && e.out == out.get() && e.kernel_size == kernel_size && e.transposed == transposed)
      return e.map;
  auto map = build_kernel_map(*in, *out, kernel_size, transposed);
  entries_.push_back({in.get(), out.get(), kernel_size, transposed, map});
  return map;
}

template <typename T>
ad::VarId apply_conv(ForwardContext<T>& ctx, ConvLayer<T>& layer, ad::VarId x,
                     const CoordinateMapPtr& in, const CoordinateMapPtr& out) {
  if (ctx.tape.value(x).cols() != layer.in_channels) throw std::invalid_argument("channel mismatch");
  auto kmap = ctx.kernel_maps.get(in, out, layer.kernel_size, layer.transposed);
  const ad::VarId w = ctx.tape.parameter(layer.weight);
  std::optional<ad::VarId> b;
  if (layer.bias) b = ctx.tape.parameter(*layer.bias);
  return ad::conv(ctx.tape, x, w, b, std::move(kmap));
}

template <typename T>
ad::VarId apply_norm(ForwardContext<T>& ctx, NormLayer<T>& layer, ad::VarId x) {
  const ad::VarId g = ctx.tape.parameter(layer.gamma);
  const ad::VarId b = ctx.tape.parameter(layer.beta);
  if (layer.kind == NormKind::batch) return ad::batch_norm(ctx.tape, x, g, b, layer.state, ctx.training);
  return ad::layer_norm(ctx.tape, x, g, b, layer.ln_eps);
}

template <typename T>
ad::VarId apply_activation(ForwardContext<T>& ctx, Activation act, ad::VarId x) {
  return act == Activation::relu ? ad::relu(ctx.tape, x) : ad::gelu(ctx.tape, x);
}

#define MINKUNEXT_INSTANTIATE_LAYERS(T)                                                          \
  template void kaiming_uniform<T>(Matrix<T>&, std::size_t, std::mt19937_64&);                   \
  template struct ConvLayer<T>;                                                                  \
  template struct NormLayer<T>;                                                                  \
  template ad::VarId apply_conv<T>(ForwardContext<T>&, ConvLayer<T>&, ad::VarId,                 \
                                   const CoordinateMapPtr&, const CoordinateMapPtr&);            \
  template ad::VarId apply_norm<T>(ForwardContext<T>&, NormLayer<T>&, ad::VarId);                \
  template ad::VarId apply_activation<T>(ForwardContext<T>&, Activation, ad::VarId);

MINKUNEXT_INSTANTIATE_LAYERS(float)
MINKUNEXT_INSTANTIATE_LAYERS(double)

}  // namespace minkunext
