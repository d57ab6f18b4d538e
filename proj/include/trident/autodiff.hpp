// Copyright 2026 Trident Contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the license.

#ifndef TRIDENT_AUTODIFF_HPP
#define TRIDENT_AUTODIFF_HPP

#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "trident/tensor.hpp"

namespace trident {

// Define-by-run reverse-mode tape. Nodes own their value; gradients are
// allocated on first accumulation. A graph lives as long as some Var refers
// to its sink; parameter leaves are kept alive by their ParamStore.
template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this->grad into the parents. Null for leaves.
  std::function<void(Node&)> backward_fn;

  void accumulate(const T* g, std::size_t n) {
    if (grad.data.empty()) grad = Tensor<T>(value.shape);
    if (n != grad.numel()) throw std::logic_error("grad accumulate: size mismatch");
    T* dst = grad.ptr();
    for (std::size_t i = 0; i < n; ++i) dst[i] += g[i];
  }
  void accumulate(const Tensor<T>& g) { accumulate(g.ptr(), g.numel()); }

  void ensure_grad() {
    if (grad.data.empty()) grad = Tensor<T>(value.shape);
  }
  void zero_grad() { grad.data.clear(); }
};

template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> n) : n_(std::move(n)) {}

  static Var leaf(Tensor<T> value, bool requires_grad = false) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
  }

  bool valid() const { return static_cast<bool>(n_); }
  Node<T>* node() const { return n_.get(); }
  const std::shared_ptr<Node<T>>& handle() const { return n_; }

  const Tensor<T>& value() const { return n_->value; }
  Tensor<T>& value() { return n_->value; }
  const Tensor<T>& grad() const { return n_->grad; }
  bool requires_grad() const { return n_->requires_grad; }

  // Scalar extraction (1-element tensors).
  T item() const {
    if (n_->value.numel() != 1) throw std::logic_error("item(): tensor is not scalar");
    return n_->value.data[0];
  }

  // A leaf sharing no graph history. The value is copied.
  Var detach() const {
    auto n = std::make_shared<Node<T>>();
    n->value = n_->value;
    return Var(std::move(n));
  }

  void zero_grad() const { n_->zero_grad(); }

  // Reverse accumulation from this scalar sink.
  void backward() const {
    if (n_->value.numel() != 1) throw std::logic_error("backward(): sink must be scalar");
    std::vector<Node<T>*> order;
    topo(n_.get(), order);
    n_->ensure_grad();
    n_->grad.data[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node<T>* n = *it;
      if (n->backward_fn && n->requires_grad && !n->grad.data.empty()) n->backward_fn(*n);
    }
  }

 private:
  static void topo(Node<T>* root, std::vector<Node<T>*>& order) {
    // Iterative post-order; the graph is a DAG with shared subexpressions.
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    seen.insert(root);
    while (!stack.empty()) {
      auto& [n, idx] = stack.back();
      if (idx < n->parents.size()) {
        Node<T>* p = n->parents[idx++].get();
        if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
  }

  std::shared_ptr<Node<T>> n_;
};

// Helper used by ops: make a non-leaf result node.
template <class T>
Var<T> make_result(Tensor<T> value, std::vector<std::shared_ptr<Node<T>>> parents,
                   std::function<void(Node<T>&)> backward_fn) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->leaf = false;
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  n->requires_grad = rg;
  if (rg) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return Var<T>(std::move(n));
}

}  // namespace trident

#endif  // TRIDENT_AUTODIFF_HPP
