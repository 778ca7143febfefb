#include "jket/typer.hpp"

#include <algorithm>
#include <cmath>

namespace jket {

void validate_instance(const TypingInstance& instance) {
  const int n = static_cast<int>(instance.tokens.size());
  if (instance.start < 0 || instance.start >= instance.end || instance.end > n) {
    throw DataError("typing_instance", "invalid span [" + std::to_string(instance.start) + "," +
                                           std::to_string(instance.end) + ") over " + std::to_string(n) + " tokens");
  }
}

TypeInventory TypeInventory::from_instances(const std::vector<TypingInstance>& data) {
  std::set<std::string> names;
  for (const TypingInstance& inst : data) names.insert(inst.types.begin(), inst.types.end());
  TypeInventory inv;
  inv.names_.assign(names.begin(), names.end());
  return inv;
}

TypeInventory TypeInventory::from_names(std::vector<std::string> names) {
  TypeInventory inv;
  inv.names_ = std::move(names);
  return inv;
}

int TypeInventory::index(const std::string& name) const {
  auto it = std::lower_bound(names_.begin(), names_.end(), name);
  if (it != names_.end() && *it == name) return static_cast<int>(it - names_.begin());
  return -1;
}

std::set<int> TypeInventory::encode(const std::vector<std::string>& types) const {
  std::set<int> out;
  for (const std::string& t : types) {
    const int idx = index(t);
    if (idx >= 0) out.insert(idx);
  }
  return out;
}

template <typename S>
TyperModel<S> TyperModel<S>::build(ParamResolver<S>& resolver, const std::string& prefix, const TyperConfig& cfg,
                                   const Vocabulary& vocab, const TypeInventory& types,
                                   const EmbeddingTable<S>& table, Rng& init_rng) {
  if (table.matrix.dim(0) != vocab.size() || table.dim != cfg.embed_dim) {
    throw ConfigError("typer", "embedding table does not match vocabulary/config");
  }
  if (cfg.head_hidden.size() != 3) throw ConfigError("typer", "head needs exactly three layer widths");
  TyperModel model;
  model.vocab = &vocab;
  model.cfg = cfg;
  model.types = types;
  model.embedding = resolver.get_or_create(
      prefix + ".embedding", {vocab.size(), cfg.embed_dim},
      [&](Tensor<S>& t) { std::copy(table.matrix.values().begin(), table.matrix.values().end(), t.values().begin()); },
      table.trainable);
  model.left_enc = BiLstmEncoder<S>::create(resolver, prefix + ".left", cfg.cell, cfg.embed_dim, cfg.hidden, init_rng);
  model.right_enc = BiLstmEncoder<S>::create(resolver, prefix + ".right", cfg.cell, cfg.embed_dim, cfg.hidden, init_rng);
  model.attention = AttentionLayer<S>::create(resolver, prefix + ".attention", 2 * cfg.hidden, cfg.attention, init_rng);
  std::vector<int> widths = {model.feature_width()};
  widths.insert(widths.end(), cfg.head_hidden.begin(), cfg.head_hidden.end());
  model.head = FeedForwardHead<S>::create(resolver, prefix + ".head", widths, /*batch_norm_after_first=*/true, init_rng);
  const int t_count = types.size();
  model.type_matrix = resolver.get_or_create(prefix + ".type_matrix", {cfg.head_hidden.back(), t_count},
                                             [&](Tensor<S>& t) { xavier_uniform(t, cfg.head_hidden.back(), t_count, init_rng); });
  return model;
}

template <typename S>
Tensor<S> TyperModel<S>::encode_mention(const TypingInstance& instance) const {
  validate_instance(instance);
  std::vector<int> ids;
  for (int i = instance.start; i < instance.end; ++i) {
    ids.push_back(vocab->index(instance.tokens[static_cast<std::size_t>(i)]));
  }
  return mean_axis0(embedding_lookup(embedding, ids));  // [d]
}

template <typename S>
Tensor<S> TyperModel<S>::context_matrix(const TypingInstance& instance) const {
  validate_instance(instance);
  const int n = static_cast<int>(instance.tokens.size());
  std::vector<int> left_ids, right_ids;
  for (int i = 0; i < instance.start; ++i) left_ids.push_back(vocab->index(instance.tokens[static_cast<std::size_t>(i)]));
  for (int i = instance.end; i < n; ++i) right_ids.push_back(vocab->index(instance.tokens[static_cast<std::size_t>(i)]));
  if (cfg.context_cap > 0) {
    if (static_cast<int>(left_ids.size()) > cfg.context_cap) {
      left_ids.erase(left_ids.begin(), left_ids.end() - cfg.context_cap);  // keep the span-adjacent side
    }
    if (static_cast<int>(right_ids.size()) > cfg.context_cap) {
      right_ids.resize(static_cast<std::size_t>(cfg.context_cap));
    }
  }
  std::vector<Tensor<S>> parts;
  if (!left_ids.empty()) {
    parts.push_back(left_enc.encode(embedding_lookup(embedding, left_ids)).states);
  }
  if (!right_ids.empty()) {
    // fed left-to-right in natural order; the bi-LSTM covers both directions
    parts.push_back(right_enc.encode(embedding_lookup(embedding, right_ids)).states);
  }
  if (parts.empty()) return {};
  return parts.size() == 1 ? parts[0] : concat(parts, 0);
}

template <typename S>
Tensor<S> TyperModel<S>::encode_context(const TypingInstance& instance) const {
  Tensor<S> context = context_matrix(instance);
  if (!context.defined()) return Tensor<S>::zeros({2 * cfg.hidden});
  return attention.attend(context).first;
}

template <typename S>
Tensor<S> TyperModel<S>::score_batch(const std::vector<TypingInstance>& batch, bool training) const {
  if (batch.empty()) throw DataError("typer.score", "empty batch");
  std::vector<Tensor<S>> features;
  features.reserve(batch.size());
  for (const TypingInstance& inst : batch) {
    features.push_back(concat<S>({encode_mention(inst), encode_context(inst)}, 0));  // [d + 2H]
  }
  Tensor<S> stacked = features.size() == 1 ? reshape(features[0], {1, feature_width()})
                                           : stack_rows(features);  // [B, F]
  Tensor<S> q = head.forward(stacked, training);
  return matmul(q, type_matrix);  // [B, T]
}

std::set<int> threshold_types(const std::vector<double>& scores, double tau, bool sigmoid_first) {
  std::set<int> out;
  double best = -1e300;
  int best_idx = 0;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    const double g = sigmoid_first ? 1.0 / (1.0 + std::exp(-scores[t])) : scores[t];
    if (g > tau) out.insert(static_cast<int>(t));
    if (g > best) {
      best = g;
      best_idx = static_cast<int>(t);
    }
  }
  if (out.empty() && !scores.empty()) out.insert(best_idx);
  return out;
}

template <typename S>
TypePrediction predict_types(const TyperModel<S>& model, const TypingInstance& instance) {
  Tensor<S> scores = model.score_batch({instance}, /*training=*/false);  // [1, T]
  TypePrediction pred;
  pred.scores.assign(scores.values().begin(), scores.values().end());
  pred.predicted = threshold_types(pred.scores, model.cfg.tau, model.cfg.sigmoid_before_threshold);
  return pred;
}

template <typename S>
Tensor<S> typing_hinge_loss(const Tensor<S>& scores, const std::vector<std::vector<int>>& gold_signs) {
  if (scores.rank() != 2) throw ShapeError("typing_hinge_loss", "scores must be [B, T]");
  const int b = scores.dim(0), t_count = scores.dim(1);
  if (static_cast<int>(gold_signs.size()) != b) throw ShapeError("typing_hinge_loss", "batch size mismatch");
  std::vector<S> signs(static_cast<std::size_t>(b) * t_count);
  for (int i = 0; i < b; ++i) {
    if (static_cast<int>(gold_signs[static_cast<std::size_t>(i)].size()) != t_count) {
      throw ShapeError("typing_hinge_loss", "gold width mismatch");
    }
    for (int t = 0; t < t_count; ++t) {
      const int y = gold_signs[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
      if (y != 1 && y != -1) throw DataError("typing_hinge_loss", "gold entries must be +-1");
      signs[static_cast<std::size_t>(i) * t_count + t] = static_cast<S>(y);
    }
  }
  Tensor<S> y = Tensor<S>::from_values({b, t_count}, std::move(signs));
  Tensor<S> margins = relu(affine(mul(scores, y), S(-1), S(1)));  // max(0, 1 - y*g)
  return affine(sum_all(margins), S(1) / static_cast<S>(b), S(0));
}

EvalReport typing_report(const std::vector<std::set<int>>& predicted, const std::vector<std::set<int>>& gold) {
  const TypingMetrics m = typing_metrics(predicted, gold);
  EvalReport report;
  report.task = "et";
  report.metrics["strict_precision"] = m.strict_precision;
  report.metrics["strict_recall"] = m.strict_recall;
  report.metrics["strict_f1"] = m.strict_f1;
  report.metrics["loose_macro_precision"] = m.loose_macro_precision;
  report.metrics["loose_macro_recall"] = m.loose_macro_recall;
  report.metrics["loose_macro_f1"] = m.loose_macro_f1;
  report.metrics["loose_micro_precision"] = m.loose_micro_precision;
  report.metrics["loose_micro_recall"] = m.loose_micro_recall;
  report.metrics["loose_micro_f1"] = m.loose_micro_f1;
  return report;
}

template <typename S>
EvalReport evaluate_typing(const TyperModel<S>& model, const std::vector<TypingInstance>& test) {
  if (test.empty()) throw DataError("evaluate_typing", "empty corpus");
  std::vector<std::set<int>> predicted, gold;
  predicted.reserve(test.size());
  gold.reserve(test.size());
  for (const TypingInstance& inst : test) {
    predicted.push_back(predict_types(model, inst).predicted);
    gold.push_back(model.types.encode(inst.types));
  }
  return typing_report(predicted, gold);
}

TyperTrainer::TyperTrainer(TyperModel<float>& model, std::vector<TypingInstance> data,
                           TyperTrainOptions options, Rng rng)
    : model_(model), data_(std::move(data)), options_(options), optimizer_(options.optimizer, {}), rng_(rng) {
  if (data_.empty()) throw DataError("typer_trainer", "no training instances");
  for (const TypingInstance& inst : data_) {
    validate_instance(inst);
    if (model_.types.encode(inst.types).empty()) {
      throw DataError("typer_trainer", "training instance without a known gold type");
    }
  }
  ModelGraph<float> scope;
  scope.add("embedding", model_.embedding, model_.embedding.requires_grad());
  auto add_cell = [&scope](const std::string& p, RecurrentCell<float>& c) {
    scope.add(p + ".w_x", c.w_x);
    scope.add(p + ".w_h", c.w_h);
    scope.add(p + ".b", c.bias);
  };
  add_cell("left.fwd", model_.left_enc.fwd);
  add_cell("left.bwd", model_.left_enc.bwd);
  add_cell("right.fwd", model_.right_enc.fwd);
  add_cell("right.bwd", model_.right_enc.bwd);
  scope.add("attention.w_a", model_.attention.w_a);
  scope.add("attention.w_s", model_.attention.w_s);
  for (std::size_t l = 0; l < model_.head.weights.size(); ++l) {
    scope.add("head.w" + std::to_string(l), model_.head.weights[l]);
    scope.add("head.b" + std::to_string(l), model_.head.biases[l]);
  }
  scope.add("head.bn.gamma", model_.head.bn_gamma);
  scope.add("head.bn.beta", model_.head.bn_beta);
  scope.add("type_matrix", model_.type_matrix);
  optimizer_ = Optimizer<float>(options_.optimizer, scope.unique_trainable());
}

void TyperTrainer::refill() {
  order_.resize(data_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  shuffle(order_, rng_);
  cursor_ = 0;
}

double TyperTrainer::train_batch(std::size_t begin, std::size_t end) {
  std::vector<TypingInstance> batch;
  std::vector<std::vector<int>> gold;
  for (std::size_t i = begin; i < end; ++i) {
    const TypingInstance& inst = data_[order_[i]];
    batch.push_back(inst);
    const std::set<int> pos = model_.types.encode(inst.types);
    std::vector<int> signs(static_cast<std::size_t>(model_.types.size()), -1);
    for (int t : pos) signs[static_cast<std::size_t>(t)] = 1;
    gold.push_back(std::move(signs));
  }
  optimizer_.zero_grad();
  Tape<float> tape;
  Tensor<float> loss = typing_hinge_loss(model_.score_batch(batch, /*training=*/true), gold);
  tape.backward(loss);
  optimizer_.step();
  return static_cast<double>(loss.item());
}

double TyperTrainer::run_epoch() {
  refill();
  double total = 0;
  long batches = 0;
  const std::size_t bs = static_cast<std::size_t>(options_.batch_size);
  for (std::size_t begin = 0; begin < order_.size(); begin += bs) {
    total += train_batch(begin, std::min(order_.size(), begin + bs));
    ++batches;
  }
  cursor_ = order_.size();
  return total / static_cast<double>(batches);
}

double TyperTrainer::run_steps(int n) {
  double total = 0;
  const std::size_t bs = static_cast<std::size_t>(options_.batch_size);
  for (int s = 0; s < n; ++s) {
    if (order_.empty() || cursor_ >= order_.size()) refill();
    const std::size_t end = std::min(order_.size(), cursor_ + bs);
    total += train_batch(cursor_, end);
    cursor_ = end;
  }
  return total / static_cast<double>(n);
}

#define JKET_INSTANTIATE_TYPER(S)                                                                      \
  template struct TyperModel<S>;                                                                       \
  template TypePrediction predict_types(const TyperModel<S>&, const TypingInstance&);                  \
  template Tensor<S> typing_hinge_loss(const Tensor<S>&, const std::vector<std::vector<int>>&);        \
  template EvalReport evaluate_typing(const TyperModel<S>&, const std::vector<TypingInstance>&);

JKET_INSTANTIATE_TYPER(float)
JKET_INSTANTIATE_TYPER(double)

#undef JKET_INSTANTIATE_TYPER

}  // namespace jket
