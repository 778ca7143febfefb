#pragma once

#include <string>
#include <vector>

#include "jket/tensor.hpp"

namespace jket {

enum class OptKind { Sgd, Adam };

OptKind opt_kind_from_string(const std::string& s);

template <typename S>
struct OptimizerConfig {
  OptKind kind = OptKind::Adam;
  S learning_rate = S(1e-3);
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S eps = S(1e-8);
  // L2 term of the training objective, realized as lambda * theta added to
  // each gradient before the update rule (identical gradient, no tape cost).
  S weight_decay = S(0);
};

// SGD / Adam over a fixed parameter list. The list is deduplicated by
// storage, so a tensor registered under several names is stepped once.
template <typename S>
class Optimizer {
 public:
  Optimizer(OptimizerConfig<S> config, std::vector<Tensor<S>> params);

  void step();
  void zero_grad();
  long step_count() const { return step_count_; }
  const OptimizerConfig<S>& config() const { return config_; }

 private:
  struct Slot {
    Tensor<S> param;
    std::vector<S> m;  // Adam first moment
    std::vector<S> v;  // Adam second moment
  };
  OptimizerConfig<S> config_;
  std::vector<Slot> slots_;
  long step_count_ = 0;
};

}  // namespace jket
