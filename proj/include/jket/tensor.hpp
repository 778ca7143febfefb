#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "jket/error.hpp"

namespace jket {

// Dense row-major shapes. Rank 0 denotes a scalar (numel 1).
using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename S>
class Tape;

// Value handle over shared storage. Copies alias the same buffer, which is
// exactly the semantic the parameter-sharing plans rely on: two model slots
// holding copies of one Tensor observe each other's updates bit-identically.
template <typename S>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, S value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<S> values, bool requires_grad = false);
  static Tensor scalar(S value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return impl_->values.size(); }

  // Constness is shallow, as for any shared handle: a const Tensor still
  // exposes its (shared) buffers for writing.
  std::span<S> values() const { return impl_->values; }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool on) const;

  // Grad buffer; empty span until ensure_grad() allocates it.
  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  std::span<S> grad() const { return impl_->grad; }
  void ensure_grad() const;
  void zero_grad() const;

  S item() const;

  bool shares_storage(const Tensor& other) const { return impl_ == other.impl_; }
  const void* id() const { return impl_.get(); }

  Tape<S>* tape() const { return impl_ ? impl_->tape : nullptr; }
  void set_tape(Tape<S>* t) const { impl_->tape = t; }

 private:
  struct Impl {
    Shape shape;
    std::vector<S> values;
    std::vector<S> grad;
    bool requires_grad = false;
    Tape<S>* tape = nullptr;  // tape that produced this node, if any
  };
  std::shared_ptr<Impl> impl_;
};

// Records the backward closure of every primitive executed while active, in
// execution order. backward() seeds d(loss)/d(loss) = 1 and replays the
// record reversed; reverse execution order is a valid topological order, and
// closures accumulate (+=) so values consumed twice receive both path
// gradients.
template <typename S>
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Active tape for this thread, or nullptr when recording is off (the
  // evaluation path simply runs without a live Tape).
  static Tape* active();

  void record(std::function<void()> backward_step) { steps_.push_back(std::move(backward_step)); }
  std::size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }

  // loss must be a scalar produced under this tape. A tape may be replayed
  // only once; rerunning would double-accumulate into leaf grads.
  void backward(const Tensor<S>& loss);

 private:
  std::vector<std::function<void()>> steps_;
  Tape* prev_ = nullptr;
  bool used_ = false;
};

// Convenience: backward through the tape that produced `loss`.
template <typename S>
void backward(const Tensor<S>& loss);

}  // namespace jket
