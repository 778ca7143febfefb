#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jket/blocks.hpp"
#include "jket/embeddings.hpp"
#include "jket/optim.hpp"
#include "jket/vocab.hpp"

namespace jket {

// BOS-prefixed, EOS-suffixed token index sequence; OOV tokens are UNK.
struct SentenceExample {
  std::vector<int> ids;  // length >= 2 after wrapping
};

SentenceExample wrap_sentence(const std::vector<std::string>& tokens, const Vocabulary& vocab);

struct LmConfig {
  int embed_dim = 32;
  int hidden = 32;
  bool tie_output = false;  // reuse the embedding matrix as output projection (needs hidden == embed_dim)
  CellKind cell = CellKind::Lstm;
};

// Unidirectional next-word model: single recurrent cell plus a vocabulary
// projection; every predictive distribution is a softmax over the full
// vocabulary.
template <typename S>
struct LmModel {
  const Vocabulary* vocab = nullptr;
  LmConfig cfg;
  Tensor<S> embedding;
  RecurrentCell<S> cell;
  Tensor<S> w_out;  // [H, V], undefined when tied
  Tensor<S> b_out;  // [V]

  static LmModel build(ParamResolver<S>& resolver, const std::string& prefix, const LmConfig& cfg,
                       const Vocabulary& vocab, const EmbeddingTable<S>& table, Rng& init_rng);

  // Next-token logits for one step: x [B, d], returns ([B, V], h, c).
  Tensor<S> step_logits(const Tensor<S>& h) const;
};

// Mean per-token negative log-likelihood over the batch. Sentences are padded
// to the longest example; PAD targets are masked out of the mean. BOS is only
// ever an input, EOS only ever a target.
template <typename S>
Tensor<S> lm_nll(const LmModel<S>& model, const std::vector<SentenceExample>& batch);

// Sum of per-token NLL and token count, accumulated in double (evaluation
// path, no tape). Used by perplexity and by reporting.
template <typename S>
std::pair<double, long> lm_eval_nll(const LmModel<S>& model, const std::vector<SentenceExample>& batch);

// exp(token-weighted mean NLL) over the corpus, batched internally.
template <typename S>
double perplexity(const LmModel<S>& model, const std::vector<SentenceExample>& corpus, int batch_size = 32);

struct GenerateOptions {
  int max_len = 20;
  bool sample = false;   // false = greedy argmax, lowest index on ties
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

// Autoregressive continuation of the prompt until EOS or max_len tokens;
// the returned tokens exclude the terminating EOS.
template <typename S>
std::vector<std::string> generate(const LmModel<S>& model, const std::vector<std::string>& prompt,
                                  const GenerateOptions& options);

struct LmTrainOptions {
  OptimizerConfig<float> optimizer;
  int batch_size = 16;
};

class LmTrainer {
 public:
  LmTrainer(LmModel<float>& model, std::vector<SentenceExample> data, LmTrainOptions options, Rng rng);

  double run_epoch();
  double run_steps(int n);

 private:
  void refill();
  double train_batch(std::size_t begin, std::size_t end);

  LmModel<float>& model_;
  std::vector<SentenceExample> data_;
  LmTrainOptions options_;
  Optimizer<float> optimizer_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace jket
