#include "amc/ad/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace amc::ad {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  for (double v : value.data) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("autograd: primitive produced a non-finite value at node " +
                               std::to_string(nodes_.size()));
    }
  }
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.tape_ != this) {
      throw std::invalid_argument("autograd: input belongs to a different tape");
    }
    node.inputs.push_back(in.id_);
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) {
    node.backward = std::move(fn);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var output) {
  if (output.tape_ != this) {
    throw std::invalid_argument("backward: output belongs to a different tape");
  }
  if (!nodes_[output.id_].value.is_scalar()) {
    throw std::invalid_argument("backward: output must be a scalar");
  }
  if (backward_done_) {
    throw std::logic_error("backward: tape already differentiated");
  }
  backward_done_ = true;
  for (auto& node : nodes_) {
    if (node.requires_grad) {
      node.grad = Tensor(node.value.shape, 0.0);
    }
  }
  if (!nodes_[output.id_].requires_grad) {
    return;
  }
  nodes_[output.id_].grad.data[0] = 1.0;

  std::vector<const Tensor*> in_values;
  std::vector<Tensor*> in_grads;
  for (std::size_t id = output.id_ + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || !node.backward) {
      continue;
    }
    in_values.clear();
    in_grads.clear();
    for (std::size_t in : node.inputs) {
      in_values.push_back(&nodes_[in].value);
      in_grads.push_back(nodes_[in].requires_grad ? &nodes_[in].grad : nullptr);
    }
    node.backward(BackwardContext{node.value, node.grad, in_values, in_grads});
  }
}

const Tensor& Tape::grad(std::size_t id) const {
  const Node& node = nodes_[id];
  if (!node.requires_grad) {
    throw std::logic_error("grad: node " + std::to_string(id) + " does not require grad");
  }
  if (!backward_done_) {
    throw std::logic_error("grad: backward has not run");
  }
  return node.grad;
}

}  // namespace amc::ad
