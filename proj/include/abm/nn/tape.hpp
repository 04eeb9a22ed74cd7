#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "abm/nn/tensor.hpp"

namespace abm::nn {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode autodiff tape. Ops append nodes in evaluation order, so
/// walking the nodes backwards is a valid topological order for backward().
///
/// A tape constructed with record = false still evaluates every op but
/// discards backward closures; inference paths use it.
class Tape {
 public:
  /// Receives the tape and the Var of the node being differentiated.
  using Backward = std::function<void(Tape&, Var self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor value);
  Var variable(Tensor value);

  /// Binds a named parameter by reference; `value` must outlive the tape.
  /// Binding the same name twice returns the first Var.
  Var parameter(const std::string& name, const Tensor& value);

  /// Appends an op result. `backward` is kept only when recording and some
  /// input requires a gradient.
  Var record(Tensor value, const std::vector<Var>& inputs, Backward backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  /// Gradient accumulated into `v`; zeros if nothing flowed there.
  Tensor grad(Var v) const;

  /// Mutable gradient buffer, allocated on first use.
  Tensor& grad_buffer(Var v);

  /// Seeds d(scalar)/d(scalar) = 1 and propagates to every recorded node.
  void backward(Var scalar);

  /// Gradients of every bound parameter, keyed by name.
  std::map<std::string, Tensor> parameter_grads() const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  std::map<std::string, std::size_t> parameters_;
  bool record_;
};

}  // namespace abm::nn
