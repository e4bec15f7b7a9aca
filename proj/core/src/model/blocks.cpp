#include "minkunext/model/blocks.hpp"

#include <stdexcept>

#include "minkunext/autodiff/ops.hpp"

namespace minkunext {

template <typename T>
ResidualBlock<T>::ResidualBlock(std::string name, const ArchConfig& cfg, std::size_t c_in,
                                std::size_t c_out, std::mt19937_64& rng)
    : variant_(cfg.block_variant),
      act_(cfg.block_activation),
      order_(cfg.block_order),
      c_in_(c_in),
      c_out_(c_out) {
  const auto [k_first, k_hidden, k_last] = cfg.block_kernel_sizes;
  const NormKind main = cfg.block_norm_main;
  auto conv = [&](int idx, int k, std::size_t a, std::size_t b, bool bias) {
    convs_.emplace_back(name + ".conv" + std::to_string(idx), k, 1, false, a, b, bias, rng);
  };
  auto norm = [&](int idx, std::size_t channels) {
    norms_.emplace_back(name + ".norm" + std::to_string(idx), main, channels, cfg);
  };

  switch (variant_) {
    case BlockVariant::inverted_bottleneck:
      hidden_ = kInvertedBottleneckExpansion * c_out;
      conv(0, k_first, c_in, c_out, false);
      conv(1, k_hidden, c_out, hidden_, order_ == BlockOrder::convnext);
      conv(2, k_last, hidden_, c_out, false);
      norm(0, c_out);
      if (order_ == BlockOrder::norm_act_each) norm(1, hidden_);
      norm(order_ == BlockOrder::norm_act_each ? 2 : 1, c_out);
      break;
    case BlockVariant::resnet:
      hidden_ = c_out;
      conv(0, k_first, c_in, c_out, false);
      conv(1, k_last, c_out, c_out, false);
      norm(0, c_out);
      norm(1, c_out);
      break;
    case BlockVariant::bottleneck:
      hidden_ = std::max<std::size_t>(1, c_out / kBottleneckReduction);
      conv(0, 1, c_in, hidden_, false);
      conv(1, k_hidden, hidden_, hidden_, false);
      conv(2, 1, hidden_, c_out, false);
      norm(0, hidden_);
      norm(1, hidden_);
      norm(2, c_out);
      break;
  }
  if (c_in != c_out) {
    proj_.emplace(name + ".proj", 1, 1, false, c_in, c_out, false, rng);
    proj_norm_.emplace(name + ".proj_norm", NormKind::batch, c_out, cfg);
  }
}

template <typename T>
ad::VarId ResidualBlock<T>::forward(ForwardContext<T>& ctx, ad::VarId x, const CoordinateMapPtr& coords) {
  if (ctx.tape.value(x).cols() != c_in_) throw std::invalid_argument("channel mismatch");
  auto conv = [&](std::size_t i, ad::VarId v) { return apply_conv(ctx, convs_[i], v, coords, coords); };
  auto norm = [&](std::size_t i, ad::VarId v) { return apply_norm(ctx, norms_[i], v); };
  auto act = [&](ad::VarId v) { return apply_activation(ctx, act_, v); };

  ad::VarId main = x;
  switch (variant_) {
    case BlockVariant::inverted_bottleneck:
      if (order_ == BlockOrder::convnext) {
        main = norm(0, conv(0, main));
        main = act(conv(1, main));
        main = norm(1, conv(2, main));
      } else {
        main = act(norm(0, conv(0, main)));
        main = act(norm(1, conv(1, main)));
        main = norm(2, conv(2, main));
      }
      break;
    case BlockVariant::resnet:
      main = act(norm(0, conv(0, main)));
      main = norm(1, conv(1, main));
      break;
    case BlockVariant::bottleneck:
      main = act(norm(0, conv(0, main)));
      main = act(norm(1, conv(1, main)));
      main = norm(2, conv(2, main));
      break;
  }

  ad::VarId residual = x;
  if (proj_) residual = apply_norm(ctx, *proj_norm_, apply_conv(ctx, *proj_, x, coords, coords));
  ad::VarId out = ad::add(ctx.tape, main, residual);
  if (variant_ != BlockVariant::inverted_bottleneck) out = act(out);
  return out;
}

template <typename T>
void ResidualBlock<T>::collect_parameters(std::vector<ad::Parameter<T>*>& out) {
  auto add_conv = [&](ConvLayer<T>& c) {
    out.push_back(&c.weight);
    if (c.bias) out.push_back(&*c.bias);
  };
  auto add_norm = [&](NormLayer<T>& n) {
    out.push_back(&n.gamma);
    out.push_back(&n.beta);
  };
  for (auto& c : convs_) add_conv(c);
  for (auto& n : norms_) add_norm(n);
  if (proj_) {
    add_conv(*proj_);
    add_norm(*proj_norm_);
  }
}

template <typename T>
void ResidualBlock<T>::collect_norms(std::vector<NormLayer<T>*>& out) {
  for (auto& n : norms_) out.push_back(&n);
  if (proj_norm_) out.push_back(&*proj_norm_);
}

template <typename T>
SparseTensor<T> minknext_block_forward(const SparseTensor<T>& x, ResidualBlock<T>& block, bool training) {
  ad::Tape<T> tape(false);
  ForwardContext<T> ctx{tape, training, {}};
  const ad::VarId in = tape.constant(x.features);
  const ad::VarId out = block.forward(ctx, in, x.coords);
  return SparseTensor<T>(x.coords, tape.value(out));
}

template class ResidualBlock<float>;
template class ResidualBlock<double>;
template SparseTensor<float> minknext_block_forward<float>(const SparseTensor<float>&, ResidualBlock<float>&, bool);
template SparseTensor<double> minknext_block_forward<double>(const SparseTensor<double>&, ResidualBlock<double>&, bool);

}  // namespace minkunext
