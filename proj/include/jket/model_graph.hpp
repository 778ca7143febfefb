#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "jket/rng.hpp"
#include "jket/tensor.hpp"

namespace jket {

// Named collection of parameter tensors. Two names may resolve to the same
// storage (parameter sharing); iteration is name-ordered so serialization
// and initialization are deterministic.
template <typename S>
class ModelGraph {
 public:
  struct Entry {
    Tensor<S> tensor;
    bool trainable = true;
  };

  Tensor<S> add(const std::string& name, Tensor<S> tensor, bool trainable = true) {
    if (entries_.count(name)) throw UsageError("model_graph", "duplicate parameter name: " + name);
    if (trainable) tensor.set_requires_grad(true);
    entries_[name] = Entry{tensor, trainable};
    return tensor;
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  Tensor<S> get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw UsageError("model_graph", "unknown parameter: " + name);
    return it->second.tensor;
  }

  bool trainable(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw UsageError("model_graph", "unknown parameter: " + name);
    return it->second.trainable;
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  // Storage-deduplicated trainable parameters; an aliased tensor appears once.
  std::vector<Tensor<S>> unique_trainable() const {
    std::vector<Tensor<S>> out;
    std::vector<const void*> seen;
    for (const auto& [name, e] : entries_) {
      if (!e.trainable) continue;
      bool dup = false;
      for (const void* id : seen)
        if (id == e.tensor.id()) dup = true;
      if (dup) continue;
      seen.push_back(e.tensor.id());
      out.push_back(e.tensor);
    }
    return out;
  }

  void zero_grad() {
    for (auto& [name, e] : entries_) {
      if (e.trainable) e.tensor.zero_grad();
    }
  }

  std::size_t total_values() const {
    std::size_t n = 0;
    std::vector<const void*> seen;
    for (const auto& [name, e] : entries_) {
      bool dup = false;
      for (const void* id : seen)
        if (id == e.tensor.id()) dup = true;
      if (dup) continue;
      seen.push_back(e.tensor.id());
      n += e.tensor.size();
    }
    return n;
  }

 private:
  std::map<std::string, Entry> entries_;
};

// Creates parameters in a graph, routing requested names through an alias map
// first. Asking for a name the plan aliases to an existing tensor returns the
// existing storage (after a shape check) and also registers the requested
// name, so both spellings resolve to one location.
template <typename S>
class ParamResolver {
 public:
  explicit ParamResolver(ModelGraph<S>& graph) : graph_(graph) {}

  void add_alias(const std::string& requested, const std::string& canonical) {
    aliases_[requested] = canonical;
  }

  std::string canonical(const std::string& name) const {
    auto it = aliases_.find(name);
    return it == aliases_.end() ? name : it->second;
  }

  Tensor<S> get_or_create(const std::string& name, const Shape& shape,
                          const std::function<void(Tensor<S>&)>& init, bool trainable = true) {
    const std::string canon = canonical(name);
    Tensor<S> t;
    if (graph_.contains(canon)) {
      t = graph_.get(canon);
      if (t.shape() != shape) {
        throw ConfigError("sharing-plan", "parameter " + name + " aliases " + canon + " with shape " +
                                              shape_str(t.shape()) + ", expected " + shape_str(shape));
      }
    } else {
      t = Tensor<S>::zeros(shape);
      if (init) init(t);
      graph_.add(canon, t, trainable);
    }
    if (canon != name && !graph_.contains(name)) graph_.add(name, t, trainable);
    return t;
  }

  ModelGraph<S>& graph() { return graph_; }

 private:
  ModelGraph<S>& graph_;
  std::map<std::string, std::string> aliases_;
};

// Xavier-uniform fill: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename S>
void xavier_uniform(Tensor<S>& t, int fan_in, int fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (S& v : t.values()) v = static_cast<S>(rng.next_uniform(-a, a));
}

template <typename S>
void uniform_fill(Tensor<S>& t, double lo, double hi, Rng& rng) {
  for (S& v : t.values()) v = static_cast<S>(rng.next_uniform(lo, hi));
}

}  // namespace jket
