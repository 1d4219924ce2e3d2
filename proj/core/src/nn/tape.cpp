#include "vihoi/nn/tape.hpp"

#include "vihoi/common/error.hpp"

namespace vihoi::nn {

template <typename T>
Var Tape<T>::constant(M value) {
  return record(std::move(value), false, nullptr);
}

template <typename T>
Var Tape<T>::parameter(Parameter<T>& p) {
  if (!grad_enabled_) return record(p.value, false, nullptr);
  Parameter<T>* target = &p;
  return record(p.value, true, [target](const M& grad) { target->grad += grad; });
}

template <typename T>
Var Tape<T>::record(M value, bool needs_grad, Backward backward) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = grad_enabled_ && needs_grad;
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
void Tape<T>::accumulate(Var v, const M& grad) {
  Node& node = nodes_[v.id];
  if (!node.needs_grad) return;
  if (node.grad.size() == 0) {
    node.grad = grad;
  } else {
    node.grad += grad;
  }
}

template <typename T>
void Tape<T>::backward(Var root) {
  if (!grad_enabled_) fail(ErrorCode::kInvalidArgument, "backward on a tape with gradients disabled");
  Node& r = nodes_[root.id];
  if (r.value.rows() != 1 || r.value.cols() != 1) fail(ErrorCode::kShapeMismatch, "backward root must be scalar");
  if (!r.needs_grad) return;
  r.grad = M::Ones(1, 1);
  for (int i = root.id; i >= 0; --i) {
    Node& node = nodes_[i];
    if (!node.needs_grad || node.grad.size() == 0) continue;
    M grad = std::move(node.grad);
    node.grad = M();
    if (node.backward) node.backward(grad);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace vihoi::nn
