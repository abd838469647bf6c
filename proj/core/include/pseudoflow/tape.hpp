#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "pseudoflow/tensor.hpp"

namespace pseudoflow {

// Gradient accumulator passed to each node's backward rule. add() sums
// contributions, so fan-out (a value consumed k times) naturally receives
// k added terms.
template <typename T>
class GradSinkT {
 public:
  explicit GradSinkT(std::vector<TensorT<T>>& grads, std::vector<bool>& present)
      : grads_(grads), present_(present) {}

  void add(int node, const TensorT<T>& g) {
    if (node < 0) return;  // constant input, no gradient tracked
    auto idx = static_cast<std::size_t>(node);
    if (!present_[idx]) {
      grads_[idx] = g.clone();
      present_[idx] = true;
      return;
    }
    auto acc = grads_[idx].mut();
    const auto src = g.data();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
  }

 private:
  std::vector<TensorT<T>>& grads_;
  std::vector<bool>& present_;
};

template <typename T>
class GradMapT {
 public:
  GradMapT(std::vector<TensorT<T>> grads, std::vector<bool> present)
      : grads_(std::move(grads)), present_(std::move(present)) {}

  bool has(int node) const {
    return node >= 0 && static_cast<std::size_t>(node) < present_.size() &&
           present_[static_cast<std::size_t>(node)];
  }
  bool has(const TensorT<T>& t) const { return has(t.node()); }

  // Missing entries read as zero (parameter not reachable from the root).
  TensorT<T> get(const TensorT<T>& t) const {
    if (has(t.node())) return grads_[static_cast<std::size_t>(t.node())];
    return TensorT<T>::zeros(t.shape());
  }

  std::size_t tracked_nodes() const { return grads_.size(); }

 private:
  std::vector<TensorT<T>> grads_;
  std::vector<bool> present_;
};

// Reverse-mode tape. Nodes are appended in execution order; backward()
// walks them exactly once in reverse. A tape belongs to one logical thread
// for its whole record/backward lifetime.
template <typename T>
class TapeT {
 public:
  using BackwardFn = std::function<void(const TensorT<T>& grad_out, GradSinkT<T>& sink)>;

  // Registers a gradient root/leaf (typically a parameter).
  int leaf(TensorT<T>& t) {
    nodes_.push_back(Node{{}, nullptr});
    t.set_node(static_cast<int>(nodes_.size()) - 1);
    return t.node();
  }

  int record(std::vector<int> inputs, BackwardFn back) {
    nodes_.push_back(Node{std::move(inputs), std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::size_t size() const { return nodes_.size(); }

  GradMapT<T> backward(const TensorT<T>& root) const {
    if (root.numel() != 1) throw ShapeError("backward root must be scalar");
    if (root.node() < 0 || static_cast<std::size_t>(root.node()) >= nodes_.size())
      throw ShapeError("backward root is not recorded on this tape");

    std::vector<TensorT<T>> grads(nodes_.size());
    std::vector<bool> present(nodes_.size(), false);
    grads[static_cast<std::size_t>(root.node())] = TensorT<T>::scalar(T(1));
    present[static_cast<std::size_t>(root.node())] = true;

    GradSinkT<T> sink(grads, present);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      if (!present[i] || !nodes_[i].back) continue;
      nodes_[i].back(grads[i], sink);
    }
    return GradMapT<T>(std::move(grads), std::move(present));
  }

 private:
  struct Node {
    std::vector<int> inputs;
    BackwardFn back;
  };
  std::vector<Node> nodes_;
};

using Tape = TapeT<float>;
using Tape64 = TapeT<double>;

}  // namespace pseudoflow
