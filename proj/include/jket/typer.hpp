#pragma once

#include <set>
#include <string>
#include <vector>

#include "jket/blocks.hpp"
#include "jket/embeddings.hpp"
#include "jket/metrics.hpp"
#include "jket/optim.hpp"
#include "jket/vocab.hpp"

namespace jket {

// Mention-in-context with gold type labels. start/end delimit the mention
// span [start, end) over the sentence tokens.
struct TypingInstance {
  std::vector<std::string> tokens;
  int start = 0;
  int end = 0;
  std::vector<std::string> types;
};

void validate_instance(const TypingInstance& instance);

// Sorted unique type inventory; scoring indexes types by position here.
class TypeInventory {
 public:
  static TypeInventory from_instances(const std::vector<TypingInstance>& data);
  static TypeInventory from_names(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  int index(const std::string& name) const;  // -1 when unknown
  const std::string& name(int idx) const { return names_[static_cast<std::size_t>(idx)]; }
  const std::vector<std::string>& names() const { return names_; }

  std::set<int> encode(const std::vector<std::string>& types) const;

 private:
  std::vector<std::string> names_;
};

struct TyperConfig {
  int embed_dim = 32;
  int hidden = 32;
  int attention = 100;
  std::vector<int> head_hidden = {128, 128, 128};  // the three layer widths
  double tau = 0.5;
  bool sigmoid_before_threshold = false;  // threshold raw scores by default
  int context_cap = 0;                    // 0 = full sentence sides
  CellKind cell = CellKind::Lstm;
};

// Mention (word-vector average) + attended context (two bi-LSTMs, shared
// attention), classified by a 3-layer head with batch norm between layers
// one and two, scored against the type matrix.
template <typename S>
struct TyperModel {
  const Vocabulary* vocab = nullptr;
  TyperConfig cfg;
  TypeInventory types;
  Tensor<S> embedding;
  BiLstmEncoder<S> left_enc;
  BiLstmEncoder<S> right_enc;
  AttentionLayer<S> attention;
  FeedForwardHead<S> head;
  Tensor<S> type_matrix;  // [head_out, T]

  static TyperModel build(ParamResolver<S>& resolver, const std::string& prefix, const TyperConfig& cfg,
                          const Vocabulary& vocab, const TypeInventory& types,
                          const EmbeddingTable<S>& table, Rng& init_rng);

  int feature_width() const { return cfg.embed_dim + 2 * cfg.hidden; }

  // Mention vector m: average of the span's word vectors. [d]
  Tensor<S> encode_mention(const TypingInstance& instance) const;

  // Attended context representation C_rep; zero vector when both context
  // sides are empty (sentence-wide mention). [2H]
  Tensor<S> encode_context(const TypingInstance& instance) const;

  // Raw context matrix C = rows of the left encoder followed by rows of the
  // right encoder; undefined Tensor when both sides are empty.
  Tensor<S> context_matrix(const TypingInstance& instance) const;

  // Type scores for a batch of instances. [B, T]
  Tensor<S> score_batch(const std::vector<TypingInstance>& batch, bool training) const;
};

struct TypePrediction {
  std::vector<double> scores;
  std::set<int> predicted;
};

// Thresholded type set {t : g_t > tau}; an empty set falls back to the argmax
// type (lowest index on ties) so every mention carries at least one type.
template <typename S>
TypePrediction predict_types(const TyperModel<S>& model, const TypingInstance& instance);

std::set<int> threshold_types(const std::vector<double>& scores, double tau, bool sigmoid_first);

// Batch-mean of sum_t max(0, 1 - y_t * g_t); gold rows are +-1 valued.
template <typename S>
Tensor<S> typing_hinge_loss(const Tensor<S>& scores, const std::vector<std::vector<int>>& gold_signs);

template <typename S>
EvalReport evaluate_typing(const TyperModel<S>& model, const std::vector<TypingInstance>& test);

EvalReport typing_report(const std::vector<std::set<int>>& predicted, const std::vector<std::set<int>>& gold);

struct TyperTrainOptions {
  OptimizerConfig<float> optimizer;
  int batch_size = 16;
};

class TyperTrainer {
 public:
  TyperTrainer(TyperModel<float>& model, std::vector<TypingInstance> data, TyperTrainOptions options, Rng rng);

  double run_epoch();
  double run_steps(int n);

 private:
  void refill();
  double train_batch(std::size_t begin, std::size_t end);

  TyperModel<float>& model_;
  std::vector<TypingInstance> data_;
  TyperTrainOptions options_;
  Optimizer<float> optimizer_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace jket
