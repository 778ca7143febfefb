#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "jket/blocks.hpp"
#include "jket/embeddings.hpp"
#include "jket/metrics.hpp"
#include "jket/optim.hpp"
#include "jket/vocab.hpp"

namespace jket {

// A knowledge-graph fact; label 1 = true, 0 = corrupted/false.
struct Triple {
  std::string head;
  std::string relation;
  std::string tail;
  int label = 1;
};

std::string triple_key(const Triple& t);

enum class KgeEncoderMode { BiLstm, UniLstm };
KgeEncoderMode kge_encoder_from_string(const std::string& s);

struct KgeConfig {
  int embed_dim = 32;
  int hidden = 32;
  std::vector<int> head_hidden = {64, 64};  // widths of head layers 1..2; layer 3 matches the encoder output
  KgeEncoderMode encoder = KgeEncoderMode::BiLstm;
  CellKind cell = CellKind::Lstm;
  FinalState final_state = FinalState::Last;
  double positive_weight = 1.0;  // k in the weighted cross-entropy
};

// Triple scorer: tokenize the triple, encode the token sequence, run the
// 3-layer ReLU head on the final state, score sigma(z_L . c_final).
template <typename S>
struct KgeModel {
  const Vocabulary* vocab = nullptr;
  KgeConfig cfg;
  Tensor<S> embedding;
  RecurrentCell<S> fwd;
  RecurrentCell<S> bwd;  // unused in UniLstm mode
  FeedForwardHead<S> head;

  int encoder_width() const { return cfg.encoder == KgeEncoderMode::BiLstm ? 2 * cfg.hidden : cfg.hidden; }

  static KgeModel build(ParamResolver<S>& resolver, const std::string& prefix, const KgeConfig& cfg,
                        const Vocabulary& vocab, const EmbeddingTable<S>& table, Rng& init_rng);

  // Batched forward over triples grouped by token length. scores[i] belongs
  // to triples[order[i]]; order is the concatenation permutation.
  struct Forward {
    Tensor<S> scores;  // [N], probabilities in (0,1)
    std::vector<std::size_t> order;
  };
  Forward forward_batch(const std::vector<Triple>& triples, bool training) const;

  // Single-triple probability (evaluation path, no tape required).
  double score(const Triple& t) const;
};

// Evaluation scoring for a list of triples, honoring JKET_THREADS.
template <typename S>
std::vector<double> score_triples(const KgeModel<S>& model, const std::vector<Triple>& triples);

// Weighted cross-entropy of Eq-style form: -(1/N) sum k*y*log f + (1-y)*log(1-f),
// log arguments clamped to [1e-7, 1-1e-7]. The l2 term rides on the optimizer
// as weight decay.
template <typename S>
Tensor<S> kge_loss(const KgeModel<S>& model, const std::vector<Triple>& batch);

// For each positive, `ratio` corrupted copies with head or tail replaced by a
// random pool entity, rejecting members of `positive_keys`; deterministic
// given the rng state. SamplingError after 100 rejected draws for one slot.
std::vector<Triple> corrupt_negatives(const std::vector<Triple>& positives,
                                      const std::vector<std::string>& entity_pool, int ratio,
                                      const std::set<std::string>& positive_keys, Rng& rng);

struct ThresholdTable {
  std::map<std::string, double> per_relation;
  double global_threshold = 0.5;

  double threshold_for(const std::string& relation) const {
    auto it = per_relation.find(relation);
    return it == per_relation.end() ? global_threshold : it->second;
  }
};

// Accuracy-maximizing cut over candidate thresholds (midpoints of adjacent
// sorted scores plus sentinels outside the score range). Ties prefer the
// lowest candidate, so inseparable score sets fall to the majority label.
double best_threshold(const std::vector<double>& scores, const std::vector<int>& labels);

template <typename S>
ThresholdTable fit_thresholds(const KgeModel<S>& model, const std::vector<Triple>& dev);

template <typename S>
EvalReport evaluate_kge(const KgeModel<S>& model, const ThresholdTable& thresholds,
                        const std::vector<Triple>& test);

// Training loop shared by the standalone command and the joint trainer; a
// fresh corruption sample is drawn every epoch from the trainer's stream.
struct KgeTrainOptions {
  OptimizerConfig<float> optimizer;
  int batch_size = 32;
  int negative_ratio = 1;
};

class KgeTrainer {
 public:
  KgeTrainer(KgeModel<float>& model, std::vector<Triple> positives, KgeTrainOptions options, Rng rng);

  double run_epoch();
  double run_steps(int n);
  long steps_done() const { return steps_done_; }
  const std::set<std::string>& positive_keys() const { return positive_keys_; }
  const std::vector<std::string>& entity_pool() const { return entity_pool_; }

 private:
  void refill();
  double train_batch(std::size_t begin, std::size_t end);

  KgeModel<float>& model_;
  std::vector<Triple> positives_;
  std::vector<std::string> entity_pool_;
  std::set<std::string> positive_keys_;
  KgeTrainOptions options_;
  Optimizer<float> optimizer_;
  Rng rng_;
  std::vector<Triple> examples_;
  std::size_t cursor_ = 0;
  long steps_done_ = 0;
};

}  // namespace jket
