#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "minkunext/matrix.hpp"

namespace minkunext::ad {

/// Learnable tensor with its accumulated gradient.
template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;

  Parameter() = default;
  Parameter(std::string n, Matrix<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad = Matrix<T>(value.rows(), value.cols()); }
};

using VarId = std::size_t;

/// Reverse-mode record of one forward pass. Nodes are appended in execution
/// order, so every node's inputs precede it.
template <typename T>
class Tape {
 public:
  struct BackwardArgs {
    const Matrix<T>& upstream;
    const Matrix<T>& output;
    std::span<const Matrix<T>* const> inputs;
    /// Null where the input does not require a gradient. Backward functions
    /// accumulate (+=) into these.
    std::span<Matrix<T>* const> grads;
  };
  using BackwardFn = std::function<void(const BackwardArgs&)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const noexcept { return grad_enabled_; }

  VarId constant(Matrix<T> value);
  /// Leaf whose gradient is added to `p.grad` by backward().
  VarId parameter(Parameter<T>& p);
  VarId record(std::string_view op, Matrix<T> value, std::vector<VarId> inputs, BackwardFn fn);

  const Matrix<T>& value(VarId id) const;
  bool requires_grad(VarId id) const { return nodes_.at(id).requires_grad; }
  std::string_view op(VarId id) const { return nodes_.at(id).op; }
  const std::vector<VarId>& inputs(VarId id) const { return nodes_.at(id).inputs; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Propagates d(loss)/d(node) back to every parameter leaf. `loss` must be a
  /// 1 x 1 node. Parameters not reached keep their gradient unchanged.
  void backward(VarId loss);

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    std::string_view op;
    Matrix<T> owned;
    Parameter<T>* param = nullptr;
    std::vector<VarId> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  bool grad_enabled_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace minkunext::ad
