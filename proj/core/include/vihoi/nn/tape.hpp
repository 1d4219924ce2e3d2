#pragma once

#include <functional>
#include <vector>

#include "vihoi/nn/parameter.hpp"
#include "vihoi/nn/tensor.hpp"

namespace vihoi::nn {

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff over dense matrices. Every op appends a node holding
// its value and a closure that pushes the node's gradient to its inputs.
// With gradients disabled no closures are kept and parameters are recorded
// as constants.
template <typename T>
class Tape {
 public:
  using M = Matrix<T>;
  using Backward = std::function<void(const M& grad)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(M value);
  Var parameter(Parameter<T>& p);

  const M& value(Var v) const { return nodes_[v.id].value; }
  T scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  Var record(M value, bool needs_grad, Backward backward);
  void accumulate(Var v, const M& grad);

  // Seeds d(root)/d(root) = 1 (root must be 1×1) and propagates to every
  // parameter, adding into Parameter::grad.
  void backward(Var root);

 private:
  struct Node {
    M value;
    M grad;
    bool needs_grad = false;
    Backward backward;
  };

  bool grad_enabled_;
  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace vihoi::nn
