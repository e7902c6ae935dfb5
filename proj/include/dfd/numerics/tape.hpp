#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "dfd/error.hpp"
#include "dfd/numerics/parameters.hpp"
#include "dfd/numerics/tensor.hpp"

namespace dfd::num {

template <typename T>
class Tape;

// Handle to a tensor recorded on a tape. Cheap to copy; valid for the
// lifetime of the tape.
template <typename T>
class Var {
 public:
  Var() = default;

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape<T>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape<T>;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Ordered record of primitive operations. Each op stores a closure that
// pulls the output gradient and accumulates into its inputs' gradients;
// backward() replays those closures in exact reverse order. Gradients of
// parameter leaves are added into Parameter::grad when the replay finishes.
template <typename T>
class Tape {
 public:
  // Called with the op's output value and its accumulated gradient.
  using BackwardFn =
      std::function<void(Tape&, const Tensor<T>& out, const Tensor<T>& grad_out)>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  Var<T> constant(Tensor<T> value) { return push(std::move(value), nullptr, false); }

  Var<T> param(Parameter<T>& p) { return push(p.value, &p, recording_); }

  // Appends an op output. `backward` may be empty for non-differentiable
  // outputs; it is dropped when none of `inputs` needs a gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn backward) {
    if (!value.all_finite()) {
      throw NumericError("non-finite value produced by op, shape " + shape_str(value.shape()));
    }
    bool needs = false;
    for (const Var<T>& in : inputs) {
      check_owned(in);
      needs = needs || nodes_[in.id()].needs_grad;
    }
    needs = needs && recording_ && static_cast<bool>(backward);
    Var<T> out = push(std::move(value), nullptr, needs);
    if (needs) ops_.push_back(Op{out.id(), std::move(backward)});
    return out;
  }

  const Tensor<T>& value(const Var<T>& v) const { return nodes_[v.id()].value; }

  bool needs_grad(const Var<T>& v) const { return nodes_[v.id()].needs_grad; }

  // Gradient accumulator for `v`, allocated as zeros on first access.
  Tensor<T>& grad(const Var<T>& v) {
    Node& n = nodes_[v.id()];
    if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }

  bool has_grad(const Var<T>& v) const { return !nodes_[v.id()].grad.empty(); }

  std::size_t op_count() const { return ops_.size(); }
  std::size_t node_count() const { return nodes_.size(); }

  // Replays the tape from `loss` (must be a single-element tensor). When
  // `visit_order` is given, the index of every op is appended as it is
  // visited.
  void backward(const Var<T>& loss, std::vector<std::size_t>* visit_order = nullptr) {
    check_owned(loss);
    if (value(loss).size() != 1) {
      throw UsageError("backward() requires a scalar loss, got shape " +
                       shape_str(value(loss).shape()));
    }
    if (backward_done_) throw UsageError("backward() already ran on this tape");
    backward_done_ = true;
    if (!needs_grad(loss)) return;
    grad(loss).fill(T{1});
    for (std::size_t i = ops_.size(); i-- > 0;) {
      if (visit_order) visit_order->push_back(i);
      const Node& out = nodes_[ops_[i].out];
      if (out.grad.empty()) continue;
      ops_[i].backward(*this, out.value, out.grad);
    }
    for (Node& n : nodes_) {
      if (n.param == nullptr || n.grad.empty()) continue;
      auto dst = n.param->grad.data();
      auto src = n.grad.data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    Parameter<T>* param = nullptr;
    bool needs_grad = false;
  };

  struct Op {
    std::size_t out;
    BackwardFn backward;
  };

  Var<T> push(Tensor<T> value, Parameter<T>* param, bool needs_grad) {
    nodes_.push_back(Node{std::move(value), Tensor<T>(), param, needs_grad});
    return Var<T>(this, nodes_.size() - 1);
  }

  void check_owned(const Var<T>& v) const {
    if (v.tape_ != this) throw UsageError("variable does not belong to this tape");
  }

  bool recording_;
  bool backward_done_ = false;
  std::deque<Node> nodes_;
  std::vector<Op> ops_;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return tape_->value(*this);
}

}  // namespace dfd::num
