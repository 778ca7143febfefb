#include "jket/optim.hpp"

#include <cmath>

#include "jket/error.hpp"

namespace jket {

OptKind opt_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptKind::Sgd;
  if (s == "adam") return OptKind::Adam;
  throw ConfigError("optimizer", "unknown optimizer: " + s);
}

template <typename S>
Optimizer<S>::Optimizer(OptimizerConfig<S> config, std::vector<Tensor<S>> params) : config_(config) {
  if (config_.learning_rate <= S(0)) throw ConfigError("optimizer", "learning rate must be positive");
  if (config_.weight_decay < S(0)) throw ConfigError("optimizer", "weight decay must be non-negative");
  for (Tensor<S>& p : params) {
    bool dup = false;
    for (const Slot& s : slots_)
      if (s.param.id() == p.id()) dup = true;
    if (dup) continue;
    Slot slot;
    slot.param = p;
    if (config_.kind == OptKind::Adam) {
      slot.m.assign(p.size(), S(0));
      slot.v.assign(p.size(), S(0));
    }
    slots_.push_back(std::move(slot));
  }
}

template <typename S>
void Optimizer<S>::step() {
  ++step_count_;
  const S lr = config_.learning_rate;
  const S wd = config_.weight_decay;
  for (Slot& slot : slots_) {
    if (!slot.param.has_grad()) throw UsageError("optimizer.step", "parameter has no gradient buffer");
    S* theta = slot.param.values().data();
    const S* g = slot.param.grad().data();
    const std::size_t n = slot.param.size();
    if (config_.kind == OptKind::Sgd) {
      for (std::size_t i = 0; i < n; ++i) {
        const S ge = g[i] + wd * theta[i];
        theta[i] -= lr * ge;
      }
    } else {
      const S b1 = config_.beta1, b2 = config_.beta2;
      const S bc1 = S(1) - static_cast<S>(std::pow(static_cast<double>(b1), static_cast<double>(step_count_)));
      const S bc2 = S(1) - static_cast<S>(std::pow(static_cast<double>(b2), static_cast<double>(step_count_)));
      for (std::size_t i = 0; i < n; ++i) {
        const S ge = g[i] + wd * theta[i];
        slot.m[i] = b1 * slot.m[i] + (S(1) - b1) * ge;
        slot.v[i] = b2 * slot.v[i] + (S(1) - b2) * ge * ge;
        const S mhat = slot.m[i] / bc1;
        const S vhat = slot.v[i] / bc2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
      }
    }
  }
}

template <typename S>
void Optimizer<S>::zero_grad() {
  for (Slot& slot : slots_) slot.param.zero_grad();
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace jket
