#include "minkunext/autodiff/ops.hpp"

#include <memory>
#include <stdexcept>

#include "minkunext/nn/conv.hpp"
#include "minkunext/nn/elementwise.hpp"
#include "minkunext/nn/linear.hpp"

namespace minkunext::ad {

namespace {

template <typename T>
bool any_requires_grad(const Tape<T>& tape, std::initializer_list<VarId> ids) {
  if (!tape.grad_enabled()) return false;
  for (VarId id : ids)
    if (tape.requires_grad(id)) return true;
  return false;
}

}  // namespace

template <typename T>
VarId conv(Tape<T>& tape, VarId x, VarId weights, std::optional<VarId> bias, KernelMapPtr kmap) {
  if (!kmap) throw std::invalid_argument("missing kernel map");
  static const Matrix<T> no_bias;
  Matrix<T> out = nn::conv_forward(tape.value(x), tape.value(weights),
                                   bias ? tape.value(*bias) : no_bias, *kmap);
  std::vector<VarId> inputs{x, weights};
  if (bias) inputs.push_back(*bias);
  return tape.record("conv", std::move(out), std::move(inputs),
                     [kmap](const typename Tape<T>::BackwardArgs& a) {
                       nn::conv_backward(*a.inputs[0], *a.inputs[1], *kmap, a.upstream, a.grads[0],
                                         a.grads[1], a.grads.size() > 2 ? a.grads[2] : nullptr);
                     });
}

template <typename T>
VarId batch_norm(Tape<T>& tape, VarId x, VarId gamma, VarId beta, nn::BatchNormState<T>& state,
                 bool training) {
  std::shared_ptr<nn::NormCache<T>> cache;
  if (any_requires_grad(tape, {x, gamma, beta})) cache = std::make_shared<nn::NormCache<T>>();
  Matrix<T> out = nn::batch_norm_forward(tape.value(x), tape.value(gamma), tape.value(beta), state,
                                         training, cache.get());
  typename Tape<T>::BackwardFn fn;
  if (cache) {
    fn = [cache](const typename Tape<T>::BackwardArgs& a) {
      nn::batch_norm_backward(*cache, *a.inputs[1], a.upstream, a.grads[0], a.grads[1], a.grads[2]);
    };
  }
  return tape.record("batch_norm", std::move(out), {x, gamma, beta}, std::move(fn));
}

template <typename T>
VarId layer_norm(Tape<T>& tape, VarId x, VarId gamma, VarId beta, double eps) {
  std::shared_ptr<nn::NormCache<T>> cache;
  if (any_requires_grad(tape, {x, gamma, beta})) cache = std::make_shared<nn::NormCache<T>>();
  Matrix<T> out =
      nn::layer_norm_forward(tape.value(x), tape.value(gamma), tape.value(beta), eps, cache.get());
  typename Tape<T>::BackwardFn fn;
  if (cache) {
    fn = [cache](const typename Tape<T>::BackwardArgs& a) {
      nn::layer_norm_backward(*cache, *a.inputs[1], a.upstream, a.grads[0], a.grads[1], a.grads[2]);
    };
  }
  return tape.record("layer_norm", std::move(out), {x, gamma, beta}, std::move(fn));
}

template <typename T>
VarId relu(Tape<T>& tape, VarId x) {
  return tape.record("relu", nn::relu_forward(tape.value(x)), {x},
                     [](const typename Tape<T>::BackwardArgs& a) {
                       if (a.grads[0]) nn::relu_backward(*a.inputs[0], a.upstream, *a.grads[0]);
                     });
}

template <typename T>
VarId gelu(Tape<T>& tape, VarId x) {
  return tape.record("gelu", nn::gelu_forward(tape.value(x)), {x},
                     [](const typename Tape<T>::BackwardArgs& a) {
                       if (a.grads[0]) nn::gelu_backward(*a.inputs[0], a.upstream, *a.grads[0]);
                     });
}

template <typename T>
VarId add(Tape<T>& tape, VarId a, VarId b) {
  Matrix<T> out = tape.value(a);
  out += tape.value(b);
  return tape.record("add", std::move(out), {a, b}, [](const typename Tape<T>::BackwardArgs& args) {
    if (args.grads[0]) *args.grads[0] += args.upstream;
    if (args.grads[1]) *args.grads[1] += args.upstream;
  });
}

template <typename T>
VarId concat(Tape<T>& tape, VarId a, VarId b) {
  return tape.record("concat", nn::concat_forward(tape.value(a), tape.value(b)), {a, b},
                     [](const typename Tape<T>::BackwardArgs& args) {
                       nn::concat_backward(args.upstream, args.grads[0], args.grads[1]);
                     });
}

template <typename T>
VarId linear(Tape<T>& tape, VarId x, VarId weights, std::optional<VarId> bias) {
  static const Matrix<T> no_bias;
  Matrix<T> out = nn::linear_forward(tape.value(x), tape.value(weights), bias ? tape.value(*bias) : no_bias);
  std::vector<VarId> inputs{x, weights};
  if (bias) inputs.push_back(*bias);
  return tape.record("linear", std::move(out), std::move(inputs),
                     [](const typename Tape<T>::BackwardArgs& a) {
                       nn::linear_backward(*a.inputs[0], *a.inputs[1], a.upstream, a.grads[0],
                                           a.grads[1], a.grads.size() > 2 ? a.grads[2] : nullptr);
                     });
}

template <typename T>
VarId gem(Tape<T>& tape, VarId x, VarId p, nn::RowSegments segments, T eps) {
  const Matrix<T>& pv = tape.value(p);
  if (pv.rows() != 1 || pv.cols() != 1) throw std::invalid_argument("GeM exponent must be a scalar");
  Matrix<T> out = nn::gem_forward(tape.value(x), segments, pv(0, 0), eps);
  auto shared_segments = std::make_shared<const nn::RowSegments>(std::move(segments));
  return tape.record("gem", std::move(out), {x, p},
                     [shared_segments, eps](const typename Tape<T>::BackwardArgs& a) {
                       T dp = T(0);
                       nn::gem_backward(*a.inputs[0], *shared_segments, (*a.inputs[1])(0, 0), eps,
                                        a.output, a.upstream, a.grads[0], a.grads[1] ? &dp : nullptr);
                       if (a.grads[1]) (*a.grads[1])(0, 0) += dp;
                     });
}

template <typename T>
VarId weighted_sum(Tape<T>& tape, VarId x, Matrix<T> weights) {
  const Matrix<T>& xv = tape.value(x);
  if (!xv.same_shape(weights)) throw std::invalid_argument("weighted_sum shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) acc += static_cast<double>(xv.data()[i]) * weights.data()[i];
  auto w = std::make_shared<const Matrix<T>>(std::move(weights));
  return tape.record("weighted_sum", Matrix<T>(1, 1, static_cast<T>(acc)), {x},
                     [w](const typename Tape<T>::BackwardArgs& a) {
                       if (!a.grads[0]) return;
                       const T g = a.upstream(0, 0);
                       for (std::size_t i = 0; i < w->size(); ++i) a.grads[0]->data()[i] += g * w->data()[i];
                     });
}

template <typename T>
VarId sum(Tape<T>& tape, VarId x) {
  const Matrix<T>& xv = tape.value(x);
  return weighted_sum(tape, x, Matrix<T>(xv.rows(), xv.cols(), T(1)));
}

#define MINKUNEXT_INSTANTIATE_OPS(T)                                                               \
  template VarId conv<T>(Tape<T>&, VarId, VarId, std::optional<VarId>, KernelMapPtr);              \
  template VarId batch_norm<T>(Tape<T>&, VarId, VarId, VarId, nn::BatchNormState<T>&, bool);       \
  template VarId layer_norm<T>(Tape<T>&, VarId, VarId, VarId, double);                             \
  template VarId relu<T>(Tape<T>&, VarId);                                                         \
  template VarId gelu<T>(Tape<T>&, VarId);                                                         \
  template VarId add<T>(Tape<T>&, VarId, VarId);                                                   \
  template VarId concat<T>(Tape<T>&, VarId, VarId);                                                \
  template VarId linear<T>(Tape<T>&, VarId, VarId, std::optional<VarId>);                          \
  template VarId gem<T>(Tape<T>&, VarId, VarId, nn::RowSegments, T);                               \
  template VarId weighted_sum<T>(Tape<T>&, VarId, Matrix<T>);                                      \
  template VarId sum<T>(Tape<T>&, VarId);

MINKUNEXT_INSTANTIATE_OPS(float)
MINKUNEXT_INSTANTIATE_OPS(double)

}  // namespace minkunext::ad
