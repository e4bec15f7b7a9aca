#include "minkunext/autodiff/tape.hpp"

#include <memory>
#include <stdexcept>

namespace minkunext::ad {

template <typename T>
VarId Tape<T>::constant(Matrix<T> value) {
  Node node;
  node.op = "constant";
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

template <typename T>
VarId Tape<T>::parameter(Parameter<T>& p) {
  Node node;
  node.op = "parameter";
  node.param = &p;
  node.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

template <typename T>
VarId Tape<T>::record(std::string_view op, Matrix<T> value, std::vector<VarId> inputs,
                      BackwardFn fn) {
  Node node;
  node.op = op;
  node.owned = std::move(value);
  for (VarId in : inputs) {
    if (in >= nodes_.size()) throw std::out_of_range("tape input refers to a future node");
    node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
  }
  node.requires_grad = node.requires_grad && grad_enabled_ && static_cast<bool>(fn);
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

template <typename T>
const Matrix<T>& Tape<T>::value(VarId id) const {
  const Node& node = nodes_.at(id);
  return node.param ? node.param->value : node.owned;
}

template <typename T>
void Tape<T>::backward(VarId loss) {
  if (loss >= nodes_.size()) throw std::out_of_range("unknown loss node");
  const Matrix<T>& loss_value = value(loss);
  if (loss_value.rows() != 1 || loss_value.cols() != 1) throw std::invalid_argument("loss must be a scalar");
  if (!nodes_[loss].requires_grad) return;

  std::vector<std::unique_ptr<Matrix<T>>> grads(loss + 1);
  grads[loss] = std::make_unique<Matrix<T>>(1, 1, T(1));

  std::vector<const Matrix<T>*> in_values;
  std::vector<Matrix<T>*> in_grads;
  for (VarId id = loss + 1; id-- > 0;) {
    if (!grads[id]) continue;
    Node& node = nodes_[id];
    if (node.param) {
      node.param->grad += *grads[id];
    } else if (node.backward) {
      in_values.clear();
      in_grads.clear();
      for (VarId in : node.inputs) {
        in_values.push_back(&value(in));
        if (nodes_[in].requires_grad) {
          if (!grads[in]) grads[in] = std::make_unique<Matrix<T>>(value(in).rows(), value(in).cols());
          in_grads.push_back(grads[in].get());
        } else {
          in_grads.push_back(nullptr);
        }
      }
      node.backward(BackwardArgs{*grads[id], node.owned, in_values, in_grads});
    }
    grads[id].reset();
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace minkunext::ad
