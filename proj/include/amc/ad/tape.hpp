#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "amc/ad/tensor.hpp"

namespace amc::ad {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Tensor& grad() const;
  bool requires_grad() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// What a primitive's backward rule sees. `input_grads[i]` is null for
/// inputs that do not require gradients.
struct BackwardContext {
  const Tensor& output;
  const Tensor& output_grad;
  std::span<const Tensor* const> inputs;
  std::span<Tensor* const> input_grads;
};

using BackwardFn = std::function<void(const BackwardContext&)>;

/// Append-only record of primitive applications. Nodes are stored in
/// creation order, which is a topological order; backward walks it once in
/// reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Records a computed node. It requires grad iff any input does; `fn` is
  /// dropped otherwise.
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn);

  /// Reverse sweep from a scalar output. Gradients accumulate into every
  /// node that requires them; call once per tape.
  void backward(Var output);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  /// Gradient after backward(); zeros for nodes the output does not depend
  /// on. Throws std::logic_error for nodes that do not require grad.
  const Tensor& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until something flows in
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace amc::ad
