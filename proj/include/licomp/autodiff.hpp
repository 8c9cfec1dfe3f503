// Copyright (c) the licomp project authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "licomp/tensor.hpp"

namespace licomp {

// Reverse-mode tape node. Graphs are built dynamically by the ops below;
// backward() walks the tape once and then releases it. A node whose inputs all
// have requires_grad == false records nothing, so inference runs tape-free.
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated lazily, same shape as value
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.data.empty()) grad = Tensor<T>::zeros(value.shape);
  }
  void accumulate(const Tensor<T>& g) {
    ensure_grad();
    for (size_t i = 0; i < grad.data.size(); ++i) grad.data[i] += g.data[i];
  }
};

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
NodePtr<T> constant(Tensor<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  return n;
}

template <typename T>
NodePtr<T> leaf(Tensor<T> value, bool requires_grad) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

namespace detail {

template <typename T>
NodePtr<T> make_op(Tensor<T> value, std::vector<NodePtr<T>> parents,
                   std::function<void(Node<T>&)> backprop) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  for (const auto& p : parents) n->requires_grad |= p->requires_grad;
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

}  // namespace detail

// Populates grads of all reachable grad-requiring leaves, then releases the
// graph. Grads accumulate (sum rule) both within one graph and across calls;
// the optimizer clears them.
template <typename T>
void backward(const NodePtr<T>& loss) {
  if (!loss) fail(ErrorKind::kNumeric, "backward on null node");
  if (loss->value.numel() != 1)
    fail(ErrorKind::kNumeric, "backward requires a scalar loss, got shape " +
                                  shape_str(loss->value.shape));
  if (!loss->backprop)
    fail(ErrorKind::kNumeric, "backward on a detached tensor (no recorded graph)");

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  // Iterative post-order DFS.
  std::vector<std::pair<Node<T>*, size_t>> stack{{loss.get(), 0}};
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss->ensure_grad();
  loss->grad.data[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backprop) {
      n->ensure_grad();
      n->backprop(*n);
    }
  }
  // Release the tape; leaves keep their grads.
  for (Node<T>* n : order) {
    if (n->backprop) {
      n->backprop = nullptr;
      n->parents.clear();
      n->grad = Tensor<T>();
    }
  }
}

// ---- elementwise / reduction ops -------------------------------------------

template <typename T>
NodePtr<T> add(const NodePtr<T>& a, const NodePtr<T>& b) {
  if (!a->value.same_shape(b->value))
    fail(ErrorKind::kDimension, "add: shape mismatch " + shape_str(a->value.shape) + " vs " +
                                    shape_str(b->value.shape));
  Tensor<T> out = a->value;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b->value.data[i];
  return detail::make_op<T>(std::move(out), {a, b}, [](Node<T>& self) {
    self.parents[0]->accumulate(self.grad);
    self.parents[1]->accumulate(self.grad);
  });
}

template <typename T>
NodePtr<T> sub(const NodePtr<T>& a, const NodePtr<T>& b) {
  if (!a->value.same_shape(b->value))
    fail(ErrorKind::kDimension, "sub: shape mismatch " + shape_str(a->value.shape) + " vs " +
                                    shape_str(b->value.shape));
  Tensor<T> out = a->value;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->value.data[i];
  return detail::make_op<T>(std::move(out), {a, b}, [](Node<T>& self) {
    self.parents[0]->accumulate(self.grad);
    Node<T>& b = *self.parents[1];
    b.ensure_grad();
    for (size_t i = 0; i < b.grad.data.size(); ++i) b.grad.data[i] -= self.grad.data[i];
  });
}

template <typename T>
NodePtr<T> mul(const NodePtr<T>& a, const NodePtr<T>& b) {
  if (!a->value.same_shape(b->value))
    fail(ErrorKind::kDimension, "mul: shape mismatch");
  Tensor<T> out = a->value;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b->value.data[i];
  return detail::make_op<T>(std::move(out), {a, b}, [](Node<T>& self) {
    Node<T>& a = *self.parents[0];
    Node<T>& b = *self.parents[1];
    a.ensure_grad();
    b.ensure_grad();
    for (size_t i = 0; i < self.grad.data.size(); ++i) {
      a.grad.data[i] += self.grad.data[i] * b.value.data[i];
      b.grad.data[i] += self.grad.data[i] * a.value.data[i];
    }
  });
}

template <typename T>
NodePtr<T> scale(const NodePtr<T>& x, T c) {
  Tensor<T> out = x->value;
  for (auto& v : out.data) v *= c;
  return detail::make_op<T>(std::move(out), {x}, [c](Node<T>& self) {
    Node<T>& x = *self.parents[0];
    x.ensure_grad();
    for (size_t i = 0; i < x.grad.data.size(); ++i) x.grad.data[i] += c * self.grad.data[i];
  });
}

template <typename T>
NodePtr<T> square(const NodePtr<T>& x) {
  Tensor<T> out = x->value;
  for (auto& v : out.data) v *= v;
  return detail::make_op<T>(std::move(out), {x}, [](Node<T>& self) {
    Node<T>& x = *self.parents[0];
    x.ensure_grad();
    for (size_t i = 0; i < x.grad.data.size(); ++i)
      x.grad.data[i] += T(2) * x.value.data[i] * self.grad.data[i];
  });
}

template <typename T>
NodePtr<T> sum_all(const NodePtr<T>& x) {
  T s = 0;
  for (T v : x->value.data) s += v;
  return detail::make_op<T>(Tensor<T>::scalar(s), {x}, [](Node<T>& self) {
    Node<T>& x = *self.parents[0];
    x.ensure_grad();
    for (auto& g : x.grad.data) g += self.grad.data[0];
  });
}

template <typename T>
NodePtr<T> mean_all(const NodePtr<T>& x) {
  T s = 0;
  for (T v : x->value.data) s += v;
  T inv = T(1) / static_cast<T>(x->value.numel());
  return detail::make_op<T>(Tensor<T>::scalar(s * inv), {x}, [inv](Node<T>& self) {
    Node<T>& x = *self.parents[0];
    x.ensure_grad();
    for (auto& g : x.grad.data) g += inv * self.grad.data[0];
  });
}

// Adds a fixed tensor (e.g. quantization proxy noise); no gradient flows into
// the added constant.
template <typename T>
NodePtr<T> add_const(const NodePtr<T>& x, const Tensor<T>& c) {
  if (!x->value.same_shape(c))
    fail(ErrorKind::kDimension, "add_const: shape mismatch");
  Tensor<T> out = x->value;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += c.data[i];
  return detail::make_op<T>(std::move(out), {x},
                            [](Node<T>& self) { self.parents[0]->accumulate(self.grad); });
}

template <typename T>
NodePtr<T> reshape(const NodePtr<T>& x, Shape s) {
  if (numel_of(s) != x->value.numel())
    fail(ErrorKind::kDimension, "reshape: element count mismatch " +
                                    shape_str(x->value.shape) + " -> " + shape_str(s));
  Tensor<T> out(std::move(s), x->value.data);
  return detail::make_op<T>(std::move(out), {x}, [](Node<T>& self) {
    Node<T>& x = *self.parents[0];
    x.ensure_grad();
    for (size_t i = 0; i < x.grad.data.size(); ++i) x.grad.data[i] += self.grad.data[i];
  });
}

template <typename T>
NodePtr<T> mse(const NodePtr<T>& a, const NodePtr<T>& b) {
  if (!a->value.same_shape(b->value))
    fail(ErrorKind::kDimension, "mse: shape mismatch " + shape_str(a->value.shape) + " vs " +
                                    shape_str(b->value.shape));
  return mean_all(square(sub(a, b)));
}

}  // namespace licomp
