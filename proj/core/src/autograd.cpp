#include "shotwright/autograd.hpp"

#include "shotwright/error.hpp"

namespace shotwright {

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)),
      value(std::move(value_)),
      grad(Tensor::like(value)),
      first_moment(Tensor::like(value)),
      second_moment(Tensor::like(value)) {}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, &p, true});
  return Var{nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backward backward) {
  bool needs = false;
  for (auto in : inputs) needs = needs || nodes_.at(in.id).requires_grad;
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return Var{nodes_.size() - 1};
}

Tensor& Tape::grad_of(Var v) {
  auto& n = nodes_[v.id];
  if (n.grad.size() != n.value.size()) n.grad = Tensor::like(n.value);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (value(loss).size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " + shape_string(value(loss).shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor{};
  trace_.clear();
  grad_of(loss)[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    auto& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) {
      trace_.push_back(id);
      // Inputs always have smaller ids, so this node's buffer stays put.
      n.backward(*this, n.grad);
    } else if (n.param != nullptr) {
      auto dst = n.param->grad.data();
      const auto src = n.grad.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
}

}  // namespace shotwright
