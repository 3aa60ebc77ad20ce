// Copyright 2026 The CamoFA Authors. All Rights Reserved.
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
// limitations under the License.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include "camofa/numerics/tensor.hpp"

namespace camofa {

template <class T>
class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy.
template <class T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor<T>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const { return tape_->requires_grad(id_); }
  Tape<T>* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recording of differentiable operations.
///
/// Nodes are appended in execution order; backward() walks them in exact
/// reverse order. A tape supports a single backward pass; record a fresh
/// tape (or call reset()) for the next one.
template <class T>
class Tape {
 public:
  /// Receives the gradient flowing into the node's output.
  using BackwardFn = std::function<void(Tape&, const Tensor<T>&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value) {
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false, "constant"});
    return Var<T>(this, nodes_.size() - 1);
  }

  /// Leaf bound to a Parameter; backward() accumulates into param.grad.
  Var<T> watch(Parameter<T>& param) {
    nodes_.push_back(Node{param.value, {}, {}, &param, true, "param:" + param.name});
    return Var<T>(this, nodes_.size() - 1);
  }

  /// Appends an operation. `fn` is dropped when no input needs a gradient.
  Var<T> record(std::string op, Tensor<T> value, std::initializer_list<Var<T>> inputs,
                BackwardFn fn) {
    bool needs = false;
    for (const auto& in : inputs) {
      if (in.tape() != this) throw std::logic_error(op + ": input recorded on another tape");
      needs = needs || requires_grad(in.id());
    }
    if (consumed_) throw std::logic_error(op + ": tape already consumed by backward()");
    nodes_.push_back(Node{std::move(value), {}, needs ? std::move(fn) : BackwardFn{},
                          nullptr, needs, std::move(op)});
    return Var<T>(this, nodes_.size() - 1);
  }

  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  const std::string& op_name(std::size_t id) const { return nodes_.at(id).op; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

  /// Gradient buffer for a node, zero-initialized on first access.
  Tensor<T>& grad(std::size_t id) {
    Node& n = nodes_.at(id);
    if (n.grad.empty()) n.grad = Tensor<T>::zeros_like(n.value);
    return n.grad;
  }

  void accumulate(std::size_t id, const Tensor<T>& g) {
    if (!requires_grad(id)) return;
    grad(id) += g;
  }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every watched Parameter.
  void backward(const Var<T>& loss) {
    if (loss.tape() != this) throw std::logic_error("backward: loss was not recorded on this tape");
    if (consumed_) throw std::logic_error("backward: tape already consumed; re-record before a second pass");
    if (value(loss.id()).size() != 1) {
      throw DimensionError("backward: loss must be scalar, got " +
                           shape_string(value(loss.id()).shape()));
    }
    consumed_ = true;
    visit_order_.clear();
    if (!requires_grad(loss.id())) return;
    grad(loss.id())[0] = T{1};
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.backward) {
        visit_order_.push_back(i);
        n.backward(*this, n.grad);
      } else if (n.param != nullptr) {
        n.param->grad += n.grad;
      }
    }
  }

  /// Node ids whose backward function ran, in the order they ran.
  const std::vector<std::size_t>& visit_order() const noexcept { return visit_order_; }

  void reset() {
    nodes_.clear();
    visit_order_.clear();
    consumed_ = false;
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    BackwardFn backward;
    Parameter<T>* param;
    bool requires_grad;
    std::string op;
  };

  // deque keeps references to earlier nodes valid while recording.
  std::deque<Node> nodes_;
  std::vector<std::size_t> visit_order_;
  bool consumed_ = false;
};

}  // namespace camofa
