#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sqlnet/nn/tensor.hpp"

namespace sqlnet::nn {

/// A trainable tensor plus its accumulated gradient.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = true;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(T{0}); }
};

template <typename T>
class Tape;

/// Handle to one node of a Tape.
template <typename T>
struct Expr {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(*this); }
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
};

/// Computation record for reverse-mode differentiation.
///
/// Nodes are appended in execution order, so reverse iteration visits every
/// node after all of its consumers. A tape is single use: backward() may run
/// once; build a fresh tape for the next step.
template <typename T>
class Tape {
 public:
  /// Receives the node's forward value and its accumulated output gradient.
  using Backward = std::function<void(Tape&, const Tensor<T>&, const Tensor<T>&)>;

  explicit Tape(bool recording = true) : recording_(recording) { nodes_.reserve(1024); }

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  Expr<T> parameter(Parameter<T>& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
    Node node;
    node.param = &p;
    node.needs_grad = recording_ && p.requires_grad;
    nodes_.push_back(std::move(node));
    param_nodes_.emplace(&p, nodes_.size() - 1);
    return {this, nodes_.size() - 1};
  }

  Expr<T> constant(Tensor<T> value) {
    Node node;
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
  }

  const Tensor<T>& value(Expr<T> e) const {
    const Node& n = nodes_.at(e.id);
    return n.param ? n.param->value : n.value;
  }

  bool needs_grad(Expr<T> e) const { return nodes_[e.id].needs_grad; }

  /// Gradient accumulator for a node; parameters accumulate in place.
  Tensor<T>& grad(Expr<T> e) {
    Node& n = nodes_[e.id];
    if (n.param) return n.param->grad;
    if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }

  /// Appends an operator result. The backward closure is kept only when
  /// recording and at least one input needs a gradient.
  Expr<T> record(Tensor<T> value, std::initializer_list<Expr<T>> inputs, Backward backward) {
    bool needs = false;
    if (recording_) {
      for (const auto& in : inputs) needs = needs || nodes_[in.id].needs_grad;
    }
    return push(std::move(value), needs, std::move(backward));
  }

  Expr<T> record(Tensor<T> value, const std::vector<Expr<T>>& inputs, Backward backward) {
    bool needs = false;
    if (recording_) {
      for (const auto& in : inputs) needs = needs || nodes_[in.id].needs_grad;
    }
    return push(std::move(value), needs, std::move(backward));
  }

  /// Accumulates d(loss)/d(parameter) into every reachable Parameter::grad.
  void backward(Expr<T> loss) {
    if (!recording_) throw std::logic_error("backward: tape was built without recording");
    if (consumed_) {
      throw std::logic_error("backward: called twice on the same tape; zero gradients and rebuild");
    }
    consumed_ = true;
    if (value(loss).size() != 1) {
      throw ShapeError("backward: loss must be a scalar, got " + to_string(value(loss).shape()));
    }
    if (!nodes_[loss.id].needs_grad) return;
    grad(loss)[0] = T{1};
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.empty()) continue;
      n.backward(*this, n.value, n.grad);
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    Parameter<T>* param = nullptr;
    Backward backward;
    bool needs_grad = false;
  };

  Expr<T> push(Tensor<T> value, bool needs, Backward backward) {
    Node node;
    node.value = std::move(value);
    node.needs_grad = needs;
    if (needs) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
  }

  bool recording_;
  bool consumed_ = false;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, std::size_t> param_nodes_;
};

}  // namespace sqlnet::nn
