#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <utility>

#include "bipn/param_store.hpp"
#include "bipn/tensor.hpp"

namespace bipn {

/// Reverse-mode tape. One Graph per forward pass; nodes are appended in
/// evaluation order and backward() replays them in reverse. Parameter leaves
/// reference their ParamStore tensors (no copy); gradients accumulate on the
/// tape and are pushed back to the store by flush_param_grads(), which keeps
/// per-sample graphs independent until their owner merges them in a fixed
/// order.
template <typename S>
class Graph {
 public:
  struct Node {
    Tensor<S> storage;
    const Tensor<S>* value = nullptr;
    Tensor<S> grad;
    bool requires_grad = false;
    Parameter<S>* bound = nullptr;
    std::function<void(Graph&)> backprop;
  };

  int add(Tensor<S> v, bool requires_grad) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.storage = std::move(v);
    n.value = &n.storage;
    n.requires_grad = requires_grad;
    return static_cast<int>(nodes_.size()) - 1;
  }

  int add_ref(const Tensor<S>* v, bool requires_grad, Parameter<S>* bound) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.value = v;
    n.requires_grad = requires_grad;
    n.bound = bound;
    return static_cast<int>(nodes_.size()) - 1;
  }

  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  const Tensor<S>& value(int id) const { return *nodes_[static_cast<std::size_t>(id)].value; }

  /// Gradient buffer of a node, allocated (zeros) on first touch. Returns
  /// nullptr for nodes that do not require grad, so op adjoints can skip them.
  Tensor<S>* grad_acc(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return nullptr;
    if (n.grad.shape.empty()) n.grad = Tensor<S>(n.value->shape);
    return &n.grad;
  }

  bool has_grad(int id) const { return !nodes_[static_cast<std::size_t>(id)].grad.shape.empty(); }

  /// Reverse sweep from a scalar loss. Populates grad on every reachable
  /// requires_grad node; call flush_param_grads() to move leaf gradients into
  /// their ParamStore entries.
  void backward(int loss_id) {
    const Tensor<S>& lv = value(loss_id);
    if (lv.numel() != 1)
      throw NumericError("backward requires a scalar loss, got shape " + shape_str(lv.shape));
    Tensor<S>* g = grad_acc(loss_id);
    if (g == nullptr)
      throw NumericError("backward on a loss that does not require grad");
    g->data[0] = S(1);
    for (int id = loss_id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.grad.shape.empty() || !n.backprop) continue;
      n.backprop(*this);
    }
  }

  void flush_param_grads() {
    for (Node& n : nodes_) {
      if (n.bound == nullptr || n.grad.data.empty()) continue;
      n.bound->accumulate_grad(n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::deque<Node> nodes_;
};

/// Handle to a node in a Graph.
template <typename S>
struct Value {
  Graph<S>* graph = nullptr;
  int id = -1;

  bool defined() const { return graph != nullptr; }
  const Tensor<S>& tensor() const { return graph->value(id); }
  const Shape& shape() const { return graph->value(id).shape; }
  bool requires_grad() const { return graph->node(id).requires_grad; }

  /// Gradient after backward(); empty tensor if none was propagated here.
  const Tensor<S>& grad() const { return graph->node(id).grad; }
};

template <typename S>
Value<S> make_leaf(Graph<S>& g, Tensor<S> v, bool requires_grad = false) {
  return Value<S>{&g, g.add(std::move(v), requires_grad)};
}

/// Mounts a parameter as a leaf. `trainable=false` freezes it for this graph
/// (no gradient is tracked through-to it), which is how the generator step
/// sees the discriminator and vice versa.
template <typename S>
Value<S> mount(Graph<S>& g, Parameter<S>& p, bool trainable = true) {
  return Value<S>{&g, g.add_ref(&p.value, trainable, trainable ? &p : nullptr)};
}

/// Constant copy of another node's values (stop-gradient).
template <typename S>
Value<S> detach(Graph<S>& g, const Value<S>& v) {
  return make_leaf(g, v.tensor(), false);
}

}  // namespace bipn
