#include "jket/lm.hpp"

#include <algorithm>
#include <cmath>

namespace jket {

SentenceExample wrap_sentence(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  SentenceExample ex;
  ex.ids.reserve(tokens.size() + 2);
  ex.ids.push_back(Vocabulary::kBos);
  for (const std::string& t : tokens) ex.ids.push_back(vocab.index(t));
  ex.ids.push_back(Vocabulary::kEos);
  return ex;
}

template <typename S>
LmModel<S> LmModel<S>::build(ParamResolver<S>& resolver, const std::string& prefix, const LmConfig& cfg,
                             const Vocabulary& vocab, const EmbeddingTable<S>& table, Rng& init_rng) {
  if (table.matrix.dim(0) != vocab.size() || table.dim != cfg.embed_dim) {
    throw ConfigError("lm", "embedding table does not match vocabulary/config");
  }
  if (cfg.tie_output && cfg.hidden != cfg.embed_dim) {
    throw ConfigError("lm", "tied output projection needs hidden == embed_dim");
  }
  LmModel model;
  model.vocab = &vocab;
  model.cfg = cfg;
  model.embedding = resolver.get_or_create(
      prefix + ".embedding", {vocab.size(), cfg.embed_dim},
      [&](Tensor<S>& t) { std::copy(table.matrix.values().begin(), table.matrix.values().end(), t.values().begin()); },
      table.trainable);
  model.cell = RecurrentCell<S>::create(resolver, prefix + ".cell", cfg.cell, cfg.embed_dim, cfg.hidden, init_rng);
  if (!cfg.tie_output) {
    model.w_out = resolver.get_or_create(prefix + ".out.w", {cfg.hidden, vocab.size()},
                                         [&](Tensor<S>& t) { xavier_uniform(t, cfg.hidden, vocab.size(), init_rng); });
  }
  model.b_out = resolver.get_or_create(prefix + ".out.b", {vocab.size()}, {});
  return model;
}

template <typename S>
Tensor<S> LmModel<S>::step_logits(const Tensor<S>& h) const {
  Tensor<S> raw = cfg.tie_output ? matmul_nt(h, embedding) : matmul(h, w_out);
  return add(raw, b_out);
}

namespace {

struct PaddedBatch {
  std::vector<std::vector<int>> cols;  // [L][B] token ids, PAD beyond each sentence
  std::vector<int> lengths;            // wrapped lengths per sentence
  int max_len = 0;
  long target_tokens = 0;
};

PaddedBatch pad_batch(const std::vector<SentenceExample>& batch) {
  PaddedBatch p;
  p.lengths.reserve(batch.size());
  for (const SentenceExample& ex : batch) {
    if (ex.ids.size() < 2) throw DataError("lm", "sentence shorter than BOS+EOS");
    p.lengths.push_back(static_cast<int>(ex.ids.size()));
    p.max_len = std::max(p.max_len, static_cast<int>(ex.ids.size()));
    p.target_tokens += static_cast<long>(ex.ids.size()) - 1;
  }
  p.cols.assign(static_cast<std::size_t>(p.max_len), std::vector<int>(batch.size(), Vocabulary::kPad));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    for (std::size_t t = 0; t < batch[b].ids.size(); ++t) p.cols[t][b] = batch[b].ids[t];
  }
  return p;
}

}  // namespace

template <typename S>
Tensor<S> lm_nll(const LmModel<S>& model, const std::vector<SentenceExample>& batch) {
  if (batch.empty()) throw DataError("lm_nll", "empty batch");
  const PaddedBatch p = pad_batch(batch);
  const int b = static_cast<int>(batch.size());

  Tensor<S> h = Tensor<S>::zeros({b, model.cfg.hidden});
  Tensor<S> c = Tensor<S>::zeros({b, model.cfg.hidden});
  Tensor<S> total;
  for (int t = 0; t + 1 < p.max_len; ++t) {
    Tensor<S> x = embedding_lookup(model.embedding, p.cols[static_cast<std::size_t>(t)]);
    std::tie(h, c) = model.cell.step(x, h, c);
    Tensor<S> logits = model.step_logits(h);
    std::vector<S> mask(static_cast<std::size_t>(b));
    for (int i = 0; i < b; ++i) mask[static_cast<std::size_t>(i)] = (t + 1 < p.lengths[static_cast<std::size_t>(i)]) ? S(1) : S(0);
    Tensor<S> ce = cross_entropy_logits(logits, p.cols[static_cast<std::size_t>(t) + 1], mask);
    total = total.defined() ? add(total, ce) : ce;
  }
  return affine(total, S(1) / static_cast<S>(p.target_tokens), S(0));
}

template <typename S>
std::pair<double, long> lm_eval_nll(const LmModel<S>& model, const std::vector<SentenceExample>& batch) {
  if (batch.empty()) return {0.0, 0};
  const PaddedBatch p = pad_batch(batch);
  const int b = static_cast<int>(batch.size());
  const int v = model.vocab->size();

  double nll = 0;
  Tensor<S> h = Tensor<S>::zeros({b, model.cfg.hidden});
  Tensor<S> c = Tensor<S>::zeros({b, model.cfg.hidden});
  for (int t = 0; t + 1 < p.max_len; ++t) {
    Tensor<S> x = embedding_lookup(model.embedding, p.cols[static_cast<std::size_t>(t)]);
    std::tie(h, c) = model.cell.step(x, h, c);
    Tensor<S> logits = model.step_logits(h);
    for (int i = 0; i < b; ++i) {
      if (t + 1 >= p.lengths[static_cast<std::size_t>(i)]) continue;
      const S* row = logits.values().data() + static_cast<std::size_t>(i) * v;
      double mx = static_cast<double>(row[0]);
      for (int j = 1; j < v; ++j) mx = std::max(mx, static_cast<double>(row[j]));
      double z = 0;
      for (int j = 0; j < v; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
      const int target = p.cols[static_cast<std::size_t>(t) + 1][static_cast<std::size_t>(i)];
      nll += std::log(z) - (static_cast<double>(row[target]) - mx);
    }
  }
  return {nll, p.target_tokens};
}

template <typename S>
double perplexity(const LmModel<S>& model, const std::vector<SentenceExample>& corpus, int batch_size) {
  if (corpus.empty()) throw DataError("perplexity", "empty corpus");
  double nll = 0;
  long tokens = 0;
  for (std::size_t begin = 0; begin < corpus.size(); begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(corpus.size(), begin + static_cast<std::size_t>(batch_size));
    std::vector<SentenceExample> batch(corpus.begin() + static_cast<long>(begin), corpus.begin() + static_cast<long>(end));
    auto [batch_nll, batch_tokens] = lm_eval_nll(model, batch);
    nll += batch_nll;
    tokens += batch_tokens;
  }
  return std::exp(nll / static_cast<double>(tokens));
}

template <typename S>
std::vector<std::string> generate(const LmModel<S>& model, const std::vector<std::string>& prompt,
                                  const GenerateOptions& options) {
  if (options.temperature <= 0) throw ConfigError("generate", "temperature must be positive");
  const int v = model.vocab->size();
  Rng rng = Rng::derived(options.seed, "lm-sample");

  Tensor<S> h = Tensor<S>::zeros({1, model.cfg.hidden});
  Tensor<S> c = Tensor<S>::zeros({1, model.cfg.hidden});
  std::vector<int> context;
  context.push_back(Vocabulary::kBos);
  for (const std::string& t : prompt) context.push_back(model.vocab->index(t));
  for (int id : context) {
    Tensor<S> x = embedding_lookup(model.embedding, std::vector<int>{id});
    std::tie(h, c) = model.cell.step(x, h, c);
  }

  std::vector<std::string> out;
  for (int step = 0; step < options.max_len; ++step) {
    Tensor<S> logits = model.step_logits(h);
    int next = 0;
    if (!options.sample) {
      const S* row = logits.values().data();
      for (int j = 1; j < v; ++j) {
        if (row[j] > row[next]) next = j;  // lowest index wins ties
      }
    } else {
      std::vector<double> probs(static_cast<std::size_t>(v));
      const S* row = logits.values().data();
      double mx = -1e300;
      for (int j = 0; j < v; ++j) mx = std::max(mx, static_cast<double>(row[j]) / options.temperature);
      double z = 0;
      for (int j = 0; j < v; ++j) {
        probs[static_cast<std::size_t>(j)] = std::exp(static_cast<double>(row[j]) / options.temperature - mx);
        z += probs[static_cast<std::size_t>(j)];
      }
      double r = rng.next_double() * z;
      double acc = 0;
      next = v - 1;
      for (int j = 0; j < v; ++j) {
        acc += probs[static_cast<std::size_t>(j)];
        if (r < acc) {
          next = j;
          break;
        }
      }
    }
    if (next == Vocabulary::kEos) break;
    out.push_back(model.vocab->token(next));
    Tensor<S> x = embedding_lookup(model.embedding, std::vector<int>{next});
    std::tie(h, c) = model.cell.step(x, h, c);
  }
  return out;
}

LmTrainer::LmTrainer(LmModel<float>& model, std::vector<SentenceExample> data, LmTrainOptions options, Rng rng)
    : model_(model), data_(std::move(data)), options_(options), optimizer_(options.optimizer, {}), rng_(rng) {
  if (data_.empty()) throw DataError("lm_trainer", "no training sentences");
  ModelGraph<float> scope;
  scope.add("embedding", model_.embedding, model_.embedding.requires_grad());
  scope.add("cell.w_x", model_.cell.w_x);
  scope.add("cell.w_h", model_.cell.w_h);
  scope.add("cell.b", model_.cell.bias);
  if (!model_.cfg.tie_output) scope.add("out.w", model_.w_out);
  scope.add("out.b", model_.b_out);
  optimizer_ = Optimizer<float>(options_.optimizer, scope.unique_trainable());
}

void LmTrainer::refill() {
  order_.resize(data_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  shuffle(order_, rng_);
  cursor_ = 0;
}

double LmTrainer::train_batch(std::size_t begin, std::size_t end) {
  std::vector<SentenceExample> batch;
  for (std::size_t i = begin; i < end; ++i) batch.push_back(data_[order_[i]]);
  optimizer_.zero_grad();
  Tape<float> tape;
  Tensor<float> loss = lm_nll(model_, batch);
  tape.backward(loss);
  optimizer_.step();
  return static_cast<double>(loss.item());
}

double LmTrainer::run_epoch() {
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

double LmTrainer::run_steps(int n) {
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

#define JKET_INSTANTIATE_LM(S)                                                                       \
  template struct LmModel<S>;                                                                        \
  template Tensor<S> lm_nll(const LmModel<S>&, const std::vector<SentenceExample>&);                 \
  template std::pair<double, long> lm_eval_nll(const LmModel<S>&, const std::vector<SentenceExample>&); \
  template double perplexity(const LmModel<S>&, const std::vector<SentenceExample>&, int);           \
  template std::vector<std::string> generate(const LmModel<S>&, const std::vector<std::string>&, const GenerateOptions&);

JKET_INSTANTIATE_LM(float)
JKET_INSTANTIATE_LM(double)

#undef JKET_INSTANTIATE_LM

}  // namespace jket
