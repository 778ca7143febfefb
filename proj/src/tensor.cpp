#include "jket/tensor.hpp"

#include <utility>

namespace jket {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  s += "]";
  return s;
}

namespace {
void check_shape(const Shape& shape) {
  for (int d : shape) {
    if (d <= 0) throw ShapeError("tensor", "non-positive dimension in " + shape_str(shape));
  }
}
}  // namespace

template <typename S>
Tensor<S> Tensor<S>::zeros(Shape shape, bool requires_grad) {
  check_shape(shape);
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->values.assign(shape_numel(shape), S(0));
  t.impl_->shape = std::move(shape);
  t.impl_->requires_grad = requires_grad;
  return t;
}

template <typename S>
Tensor<S> Tensor<S>::full(Shape shape, S value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (S& v : t.impl_->values) v = value;
  return t;
}

template <typename S>
Tensor<S> Tensor<S>::from_values(Shape shape, std::vector<S> values, bool requires_grad) {
  check_shape(shape);
  if (values.size() != shape_numel(shape)) {
    throw ShapeError("tensor", "value count " + std::to_string(values.size()) + " does not fill " + shape_str(shape));
  }
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  t.impl_->values = std::move(values);
  t.impl_->requires_grad = requires_grad;
  return t;
}

template <typename S>
Tensor<S> Tensor<S>::scalar(S value, bool requires_grad) {
  return from_values({}, {value}, requires_grad);
}

template <typename S>
void Tensor<S>::set_requires_grad(bool on) const {
  impl_->requires_grad = on;
  if (!on) impl_->grad.clear();
}

template <typename S>
void Tensor<S>::ensure_grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), S(0));
}

template <typename S>
void Tensor<S>::zero_grad() const {
  impl_->grad.assign(impl_->values.size(), S(0));
}

template <typename S>
S Tensor<S>::item() const {
  if (!impl_ || impl_->values.size() != 1) {
    throw UsageError("tensor.item", "not a scalar: " + (impl_ ? shape_str(impl_->shape) : std::string("<undefined>")));
  }
  return impl_->values[0];
}

namespace {
template <typename S>
Tape<S>*& active_tape_slot() {
  thread_local Tape<S>* slot = nullptr;
  return slot;
}
}  // namespace

template <typename S>
Tape<S>::Tape() {
  prev_ = active_tape_slot<S>();
  active_tape_slot<S>() = this;
}

template <typename S>
Tape<S>::~Tape() {
  active_tape_slot<S>() = prev_;
}

template <typename S>
Tape<S>* Tape<S>::active() {
  return active_tape_slot<S>();
}

template <typename S>
void Tape<S>::backward(const Tensor<S>& loss) {
  if (steps_.empty()) throw UsageError("backward", "tape is empty");
  if (used_) throw UsageError("backward", "tape already replayed");
  if (!loss.defined() || loss.size() != 1) {
    throw UsageError("backward", "loss must be scalar, got " + (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  if (loss.tape() != this) throw UsageError("backward", "loss was not produced under this tape");
  used_ = true;
  Tensor<S> seed = loss;
  seed.ensure_grad();
  seed.grad()[0] = S(1);
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

template <typename S>
void backward(const Tensor<S>& loss) {
  if (!loss.defined() || loss.tape() == nullptr) {
    throw UsageError("backward", "tensor was not produced under a tape");
  }
  loss.tape()->backward(loss);
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace jket
