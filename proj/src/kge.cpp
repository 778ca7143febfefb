#include "jket/kge.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace jket {

std::string triple_key(const Triple& t) {
  return t.head + "\x1d" + t.relation + "\x1d" + t.tail;
}

KgeEncoderMode kge_encoder_from_string(const std::string& s) {
  if (s == "bilstm") return KgeEncoderMode::BiLstm;
  if (s == "lstm") return KgeEncoderMode::UniLstm;
  throw ConfigError("kge", "unknown encoder mode: " + s);
}

template <typename S>
KgeModel<S> KgeModel<S>::build(ParamResolver<S>& resolver, const std::string& prefix, const KgeConfig& cfg,
                               const Vocabulary& vocab, const EmbeddingTable<S>& table, Rng& init_rng) {
  if (table.matrix.dim(0) != vocab.size() || table.dim != cfg.embed_dim) {
    throw ConfigError("kge", "embedding table does not match vocabulary/config");
  }
  KgeModel model;
  model.vocab = &vocab;
  model.cfg = cfg;
  model.embedding = resolver.get_or_create(
      prefix + ".embedding", {vocab.size(), cfg.embed_dim},
      [&](Tensor<S>& t) { std::copy(table.matrix.values().begin(), table.matrix.values().end(), t.values().begin()); },
      table.trainable);
  model.fwd = RecurrentCell<S>::create(resolver, prefix + ".encoder.fwd", cfg.cell, cfg.embed_dim, cfg.hidden, init_rng);
  if (cfg.encoder == KgeEncoderMode::BiLstm) {
    model.bwd = RecurrentCell<S>::create(resolver, prefix + ".encoder.bwd", cfg.cell, cfg.embed_dim, cfg.hidden, init_rng);
  }
  const int c_width = model.encoder_width();
  std::vector<int> widths = {c_width};
  widths.insert(widths.end(), cfg.head_hidden.begin(), cfg.head_hidden.end());
  widths.push_back(c_width);  // z_L pairs with c_final in the matching score
  model.head = FeedForwardHead<S>::create(resolver, prefix + ".head", widths, /*batch_norm_after_first=*/false, init_rng);
  return model;
}

namespace {

// Positions-by-length grouping for batched encoding of variable-length
// token sequences.
struct LengthGroups {
  std::vector<std::vector<std::size_t>> groups;  // indices into the triple list
};

template <typename S>
LengthGroups group_by_length(const KgeModel<S>& model, const std::vector<Triple>& triples,
                             std::vector<std::vector<int>>& encoded) {
  std::map<std::size_t, std::size_t> len_to_group;
  LengthGroups out;
  encoded.resize(triples.size());
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const TripleTokens toks = tokenize_triple(triples[i].head, triples[i].relation, triples[i].tail);
    encoded[i] = model.vocab->encode(toks.flattened());
    const std::size_t len = encoded[i].size();
    auto [it, fresh] = len_to_group.emplace(len, out.groups.size());
    if (fresh) out.groups.emplace_back();
    out.groups[it->second].push_back(i);
  }
  return out;
}

}  // namespace

template <typename S>
typename KgeModel<S>::Forward KgeModel<S>::forward_batch(const std::vector<Triple>& triples, bool training) const {
  if (triples.empty()) throw DataError("kge.forward", "empty batch");
  std::vector<std::vector<int>> encoded;
  LengthGroups groups = group_by_length(*this, triples, encoded);

  std::vector<Tensor<S>> group_scores;
  Forward fwd_out;
  fwd_out.order.reserve(triples.size());
  for (const std::vector<std::size_t>& group : groups.groups) {
    const std::size_t batch = group.size();
    const std::size_t len = encoded[group[0]].size();
    std::vector<Tensor<S>> steps;
    steps.reserve(len);
    for (std::size_t t = 0; t < len; ++t) {
      std::vector<int> ids(batch);
      for (std::size_t b = 0; b < batch; ++b) ids[b] = encoded[group[b]][t];
      steps.push_back(embedding_lookup(embedding, ids));
    }

    Tensor<S> final_state;
    if (cfg.encoder == KgeEncoderMode::BiLstm) {
      BiLstmEncoder<S> enc;
      enc.fwd = fwd;
      enc.bwd = bwd;
      final_state = enc.encode_steps(steps, cfg.final_state).final_state;
    } else {
      Tensor<S> h = Tensor<S>::zeros({static_cast<int>(batch), cfg.hidden});
      Tensor<S> c = Tensor<S>::zeros({static_cast<int>(batch), cfg.hidden});
      Tensor<S> acc;
      for (std::size_t t = 0; t < len; ++t) {
        std::tie(h, c) = fwd.step(steps[t], h, c);
        if (cfg.final_state == FinalState::Mean) acc = acc.defined() ? add(acc, h) : h;
      }
      final_state = cfg.final_state == FinalState::Mean ? affine(acc, S(1) / static_cast<S>(len), S(0)) : h;
    }

    Tensor<S> z = head.forward(final_state, training);
    group_scores.push_back(sigmoid(rowwise_dot(z, final_state)));
    fwd_out.order.insert(fwd_out.order.end(), group.begin(), group.end());
  }
  fwd_out.scores = group_scores.size() == 1 ? group_scores[0] : concat(group_scores, 0);
  return fwd_out;
}

template <typename S>
double KgeModel<S>::score(const Triple& t) const {
  Forward f = forward_batch({t}, /*training=*/false);
  return static_cast<double>(f.scores.values()[0]);
}

template <typename S>
std::vector<double> score_triples(const KgeModel<S>& model, const std::vector<Triple>& triples) {
  std::vector<double> out(triples.size());
  if (triples.empty()) return out;

  int threads = 1;
  if (const char* env = std::getenv("JKET_THREADS")) {
    threads = std::max(1, std::atoi(env));
  }
  threads = std::min<int>(threads, static_cast<int>(triples.size()));

  auto score_range = [&](std::size_t begin, std::size_t end) {
    std::vector<Triple> chunk(triples.begin() + static_cast<long>(begin), triples.begin() + static_cast<long>(end));
    typename KgeModel<S>::Forward f = model.forward_batch(chunk, /*training=*/false);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      out[begin + f.order[i]] = static_cast<double>(f.scores.values()[i]);
    }
  };

  if (threads <= 1) {
    score_range(0, triples.size());
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t per = (triples.size() + static_cast<std::size_t>(threads) - 1) / static_cast<std::size_t>(threads);
  for (int t = 0; t < threads; ++t) {
    const std::size_t begin = static_cast<std::size_t>(t) * per;
    const std::size_t end = std::min(triples.size(), begin + per);
    if (begin >= end) break;
    pool.emplace_back(score_range, begin, end);
  }
  for (std::thread& th : pool) th.join();
  return out;
}

template <typename S>
Tensor<S> kge_loss(const KgeModel<S>& model, const std::vector<Triple>& batch) {
  if (batch.empty()) throw DataError("kge_loss", "empty batch");
  typename KgeModel<S>::Forward f = model.forward_batch(batch, /*training=*/true);
  const int n = static_cast<int>(batch.size());

  std::vector<S> w_pos(static_cast<std::size_t>(n)), w_neg(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int label = batch[f.order[static_cast<std::size_t>(i)]].label;
    if (label != 0 && label != 1) throw DataError("kge_loss", "labels must be 0/1");
    w_pos[static_cast<std::size_t>(i)] = label == 1 ? static_cast<S>(model.cfg.positive_weight) : S(0);
    w_neg[static_cast<std::size_t>(i)] = label == 1 ? S(0) : S(1);
  }
  const S lo = static_cast<S>(1e-7);
  const S hi = static_cast<S>(1.0 - 1e-7);
  Tensor<S> fprob = clamp(f.scores, lo, hi);
  Tensor<S> pos_term = mul(log_op(fprob), Tensor<S>::from_values({n}, std::move(w_pos)));
  Tensor<S> neg_term = mul(log_op(affine(fprob, S(-1), S(1))), Tensor<S>::from_values({n}, std::move(w_neg)));
  return affine(sum_all(add(pos_term, neg_term)), S(-1) / static_cast<S>(n), S(0));
}

std::vector<Triple> corrupt_negatives(const std::vector<Triple>& positives,
                                      const std::vector<std::string>& entity_pool, int ratio,
                                      const std::set<std::string>& positive_keys, Rng& rng) {
  if (entity_pool.empty()) throw DataError("corrupt_negatives", "empty entity pool");
  if (ratio < 1) throw DataError("corrupt_negatives", "ratio must be >= 1");
  std::vector<Triple> negatives;
  negatives.reserve(positives.size() * static_cast<std::size_t>(ratio));
  for (const Triple& pos : positives) {
    for (int r = 0; r < ratio; ++r) {
      Triple neg = pos;
      neg.label = 0;
      bool found = false;
      for (int attempt = 0; attempt < 100; ++attempt) {
        const bool corrupt_head = rng.next_bool();
        const std::string& entity = entity_pool[rng.next_below(entity_pool.size())];
        Triple candidate = pos;
        candidate.label = 0;
        (corrupt_head ? candidate.head : candidate.tail) = entity;
        if (positive_keys.count(triple_key(candidate))) continue;
        neg = candidate;
        found = true;
        break;
      }
      if (!found) {
        throw SamplingError("corrupt_negatives", "no valid corruption for (" + pos.head + ", " + pos.relation +
                                                     ", " + pos.tail + ") after 100 attempts");
      }
      negatives.push_back(std::move(neg));
    }
  }
  return negatives;
}

double best_threshold(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.empty() || scores.size() != labels.size()) throw DataError("fit_thresholds", "empty score set");
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<double> candidates;
  candidates.push_back(sorted.front() / 2.0);  // below every score: predict all positive
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) candidates.push_back((sorted[i] + sorted[i + 1]) / 2.0);
  candidates.push_back((sorted.back() + 1.0) / 2.0);  // above every score: predict all negative

  double best = candidates.front();
  long best_correct = -1;
  for (double cand : candidates) {
    long correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const int pred = scores[i] > cand ? 1 : 0;
      correct += (pred == labels[i]);
    }
    if (correct > best_correct) {  // ties keep the lowest candidate
      best_correct = correct;
      best = cand;
    }
  }
  return best;
}

template <typename S>
ThresholdTable fit_thresholds(const KgeModel<S>& model, const std::vector<Triple>& dev) {
  if (dev.empty()) throw DataError("fit_thresholds", "empty dev set");
  const std::vector<double> scores = score_triples(model, dev);
  std::vector<int> labels(dev.size());
  for (std::size_t i = 0; i < dev.size(); ++i) labels[i] = dev[i].label;

  ThresholdTable table;
  table.global_threshold = best_threshold(scores, labels);

  std::map<std::string, std::vector<std::size_t>> by_relation;
  for (std::size_t i = 0; i < dev.size(); ++i) by_relation[dev[i].relation].push_back(i);
  for (const auto& [relation, idx] : by_relation) {
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i : idx) {
      s.push_back(scores[i]);
      y.push_back(labels[i]);
    }
    table.per_relation[relation] = best_threshold(s, y);
  }
  return table;
}

template <typename S>
EvalReport evaluate_kge(const KgeModel<S>& model, const ThresholdTable& thresholds,
                        const std::vector<Triple>& test) {
  if (test.empty()) throw DataError("evaluate_kge", "empty test set");
  const std::vector<double> scores = score_triples(model, test);
  std::vector<int> labels(test.size()), preds(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    labels[i] = test[i].label;
    preds[i] = scores[i] > thresholds.threshold_for(test[i].relation) ? 1 : 0;
  }
  const BinaryMetrics m = binary_metrics(scores, preds, labels);
  EvalReport report;
  report.task = "kge";
  report.metrics["accuracy"] = m.accuracy;
  report.metrics["precision"] = m.precision;
  report.metrics["recall"] = m.recall;
  report.metrics["f1"] = m.f1;
  if (m.auroc) report.metrics["auroc"] = *m.auroc;
  if (m.aucpr) report.metrics["aucpr"] = *m.aucpr;
  return report;
}

KgeTrainer::KgeTrainer(KgeModel<float>& model, std::vector<Triple> positives, KgeTrainOptions options, Rng rng)
    : model_(model),
      positives_(std::move(positives)),
      options_(options),
      optimizer_(options.optimizer, {}),
      rng_(rng) {
  if (positives_.empty()) throw DataError("kge_trainer", "no training triples");
  std::set<std::string> pool;
  for (const Triple& t : positives_) {
    if (t.label != 1) throw DataError("kge_trainer", "training positives must carry label 1");
    positive_keys_.insert(triple_key(t));
    pool.insert(t.head);
    pool.insert(t.tail);
  }
  entity_pool_.assign(pool.begin(), pool.end());
  ModelGraph<float> scope;  // collect this model's unique parameters
  scope.add("embedding", model_.embedding, model_.embedding.requires_grad());
  scope.add("fwd.w_x", model_.fwd.w_x);
  scope.add("fwd.w_h", model_.fwd.w_h);
  scope.add("fwd.b", model_.fwd.bias);
  if (model_.cfg.encoder == KgeEncoderMode::BiLstm) {
    scope.add("bwd.w_x", model_.bwd.w_x);
    scope.add("bwd.w_h", model_.bwd.w_h);
    scope.add("bwd.b", model_.bwd.bias);
  }
  for (std::size_t l = 0; l < model_.head.weights.size(); ++l) {
    scope.add("head.w" + std::to_string(l), model_.head.weights[l]);
    scope.add("head.b" + std::to_string(l), model_.head.biases[l]);
  }
  optimizer_ = Optimizer<float>(options_.optimizer, scope.unique_trainable());
}

void KgeTrainer::refill() {
  examples_ = positives_;
  std::vector<Triple> negatives = corrupt_negatives(positives_, entity_pool_, options_.negative_ratio,
                                                    positive_keys_, rng_);
  examples_.insert(examples_.end(), negatives.begin(), negatives.end());
  shuffle(examples_, rng_);
  cursor_ = 0;
}

double KgeTrainer::train_batch(std::size_t begin, std::size_t end) {
  std::vector<Triple> batch(examples_.begin() + static_cast<long>(begin), examples_.begin() + static_cast<long>(end));
  optimizer_.zero_grad();
  Tape<float> tape;
  Tensor<float> loss = kge_loss(model_, batch);
  tape.backward(loss);
  optimizer_.step();
  ++steps_done_;
  return static_cast<double>(loss.item());
}

double KgeTrainer::run_epoch() {
  refill();
  double total = 0;
  long batches = 0;
  const std::size_t bs = static_cast<std::size_t>(options_.batch_size);
  for (std::size_t begin = 0; begin < examples_.size(); begin += bs) {
    total += train_batch(begin, std::min(examples_.size(), begin + bs));
    ++batches;
  }
  cursor_ = examples_.size();
  return total / static_cast<double>(batches);
}

double KgeTrainer::run_steps(int n) {
  double total = 0;
  const std::size_t bs = static_cast<std::size_t>(options_.batch_size);
  for (int s = 0; s < n; ++s) {
    if (cursor_ >= examples_.size()) refill();
    const std::size_t end = std::min(examples_.size(), cursor_ + bs);
    total += train_batch(cursor_, end);
    cursor_ = end;
  }
  return total / static_cast<double>(n);
}

#define JKET_INSTANTIATE_KGE(S)                                                                    \
  template struct KgeModel<S>;                                                                     \
  template std::vector<double> score_triples(const KgeModel<S>&, const std::vector<Triple>&);      \
  template Tensor<S> kge_loss(const KgeModel<S>&, const std::vector<Triple>&);                     \
  template ThresholdTable fit_thresholds(const KgeModel<S>&, const std::vector<Triple>&);          \
  template EvalReport evaluate_kge(const KgeModel<S>&, const ThresholdTable&, const std::vector<Triple>&);

JKET_INSTANTIATE_KGE(float)
JKET_INSTANTIATE_KGE(double)

#undef JKET_INSTANTIATE_KGE

}  // namespace jket
