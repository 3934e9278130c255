#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "shotwright/tensor.hpp"

namespace shotwright {

/// A trainable tensor with its gradient and adaptive-moment optimizer state.
struct Parameter {
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;
  Tensor first_moment;
  Tensor second_moment;
  std::int64_t step = 0;

  void zero_grad() { grad.fill(0.0); }
};

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Records operations in execution order so a scalar output can be
/// differentiated in reverse. Parameter nodes read the parameter's value at
/// record time; backward() adds their gradients into Parameter::grad.
class Tape {
 public:
  /// Receives the gradient of the node's output and pushes it to its inputs
  /// through Tape::grad_of.
  using Backward = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(Parameter& p);
  /// Records an op output. `backward` is skipped when no input needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, std::span<const Var> inputs, Backward backward);
  /// Id the next recorded node will get; lets a backward read its own output.
  Var next() const { return Var{nodes_.size()}; }

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  /// Gradient buffer of a node, allocated on first use. Only meaningful
  /// during or after backward().
  Tensor& grad_of(Var v);
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded backward in reverse
  /// recording order. `loss` must hold a single value.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  /// Node ids whose backward ran, in the order they ran (latest call).
  const std::vector<std::size_t>& backward_trace() const { return trace_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  std::vector<std::size_t> trace_;
};

}  // namespace shotwright
