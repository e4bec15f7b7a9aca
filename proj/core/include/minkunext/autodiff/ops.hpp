#pragma once

#include <optional>

#include "minkunext/autodiff/tape.hpp"
#include "minkunext/kernel_map.hpp"
#include "minkunext/nn/gem.hpp"
#include "minkunext/nn/normalization.hpp"

// Differentiable wrappers recording sparse-nn-ops primitives on a Tape.
namespace minkunext::ad {

template <typename T>
VarId conv(Tape<T>& tape, VarId x, VarId weights, std::optional<VarId> bias, KernelMapPtr kmap);

template <typename T>
VarId batch_norm(Tape<T>& tape, VarId x, VarId gamma, VarId beta, nn::BatchNormState<T>& state,
                 bool training);

template <typename T>
VarId layer_norm(Tape<T>& tape, VarId x, VarId gamma, VarId beta, double eps);

template <typename T>
VarId relu(Tape<T>& tape, VarId x);

template <typename T>
VarId gelu(Tape<T>& tape, VarId x);

template <typename T>
VarId add(Tape<T>& tape, VarId a, VarId b);

template <typename T>
VarId concat(Tape<T>& tape, VarId a, VarId b);

template <typename T>
VarId linear(Tape<T>& tape, VarId x, VarId weights, std::optional<VarId> bias);

/// `p` is a 1 x 1 node.
template <typename T>
VarId gem(Tape<T>& tape, VarId x, VarId p, nn::RowSegments segments, T eps);

/// sum_ij x_ij * w_ij with a constant weight matrix; handy for reducing a
/// tensor to a scalar loss.
template <typename T>
VarId weighted_sum(Tape<T>& tape, VarId x, Matrix<T> weights);

template <typename T>
VarId sum(Tape<T>& tape, VarId x);

}  // namespace minkunext::ad
