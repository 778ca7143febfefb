#include "jket/blocks.hpp"

namespace jket {

CellKind cell_kind_from_string(const std::string& s) {
  if (s == "lstm") return CellKind::Lstm;
  if (s == "simple-rnn") return CellKind::SimpleRnn;
  throw ConfigError("cell", "unknown cell kind: " + s);
}

FinalState final_state_from_string(const std::string& s) {
  if (s == "last") return FinalState::Last;
  if (s == "mean") return FinalState::Mean;
  throw ConfigError("final-state", "unknown final state mode: " + s);
}

template <typename S>
RecurrentCell<S> RecurrentCell<S>::create(ParamResolver<S>& resolver, const std::string& prefix,
                                          CellKind kind, int input_dim, int hidden, Rng& rng) {
  RecurrentCell cell;
  cell.kind = kind;
  cell.input_dim = input_dim;
  cell.hidden = hidden;
  const int gates = kind == CellKind::Lstm ? 4 * hidden : hidden;
  cell.w_x = resolver.get_or_create(prefix + ".w_x", {input_dim, gates},
                                    [&](Tensor<S>& t) { xavier_uniform(t, input_dim, hidden, rng); });
  cell.w_h = resolver.get_or_create(prefix + ".w_h", {hidden, gates},
                                    [&](Tensor<S>& t) { xavier_uniform(t, hidden, hidden, rng); });
  cell.bias = resolver.get_or_create(prefix + ".b", {gates}, [&](Tensor<S>& t) {
    if (kind == CellKind::Lstm) {
      for (int j = hidden; j < 2 * hidden; ++j) t.values()[static_cast<std::size_t>(j)] = S(1);  // forget gate
    }
  });
  return cell;
}

template <typename S>
std::pair<Tensor<S>, Tensor<S>> RecurrentCell<S>::step(const Tensor<S>& x, const Tensor<S>& h_prev,
                                                       const Tensor<S>& c_prev) const {
  if (x.rank() != 2 || x.dim(1) != input_dim) {
    throw ShapeError("cell.step", "input " + shape_str(x.shape()) + ", expected [B," + std::to_string(input_dim) + "]");
  }
  if (h_prev.rank() != 2 || h_prev.dim(1) != hidden || h_prev.dim(0) != x.dim(0)) {
    throw ShapeError("cell.step", "hidden state " + shape_str(h_prev.shape()));
  }
  Tensor<S> pre = add(add(matmul(x, w_x), matmul(h_prev, w_h)), bias);
  if (kind == CellKind::SimpleRnn) {
    Tensor<S> h = tanh_op(pre);
    return {h, c_prev};
  }
  const int h_dim = hidden;
  Tensor<S> i = sigmoid(slice(pre, 1, 0, h_dim));
  Tensor<S> f = sigmoid(slice(pre, 1, h_dim, h_dim));
  Tensor<S> g = tanh_op(slice(pre, 1, 2 * h_dim, h_dim));
  Tensor<S> o = sigmoid(slice(pre, 1, 3 * h_dim, h_dim));
  Tensor<S> c = add(mul(f, c_prev), mul(i, g));
  Tensor<S> h = mul(o, tanh_op(c));
  return {h, c};
}

template <typename S>
std::pair<Tensor<S>, Tensor<S>> lstm_step(const RecurrentCell<S>& cell, const Tensor<S>& x,
                                          const Tensor<S>& h_prev, const Tensor<S>& c_prev) {
  if (x.rank() != 1 || h_prev.rank() != 1 || c_prev.rank() != 1) {
    throw ShapeError("lstm_step", "expects rank-1 inputs");
  }
  auto [h, c] = cell.step(reshape(x, {1, x.dim(0)}), reshape(h_prev, {1, h_prev.dim(0)}),
                          reshape(c_prev, {1, c_prev.dim(0)}));
  return {reshape(h, {h.dim(1)}), reshape(c, {c.dim(1)})};
}

template <typename S>
BiLstmEncoder<S> BiLstmEncoder<S>::create(ParamResolver<S>& resolver, const std::string& prefix,
                                          CellKind kind, int input_dim, int hidden, Rng& rng) {
  BiLstmEncoder enc;
  enc.fwd = RecurrentCell<S>::create(resolver, prefix + ".fwd", kind, input_dim, hidden, rng);
  enc.bwd = RecurrentCell<S>::create(resolver, prefix + ".bwd", kind, input_dim, hidden, rng);
  return enc;
}

template <typename S>
typename BiLstmEncoder<S>::EncodedBatch BiLstmEncoder<S>::encode_steps(const std::vector<Tensor<S>>& steps,
                                                                       FinalState mode) const {
  if (steps.empty()) throw DataError("encode_sequence", "empty sequence");
  const int n = static_cast<int>(steps.size());
  const int batch = steps[0].dim(0);
  const int h_dim = fwd.hidden;

  std::vector<Tensor<S>> fwd_states(static_cast<std::size_t>(n));
  Tensor<S> h = Tensor<S>::zeros({batch, h_dim});
  Tensor<S> c = Tensor<S>::zeros({batch, h_dim});
  for (int t = 0; t < n; ++t) {
    std::tie(h, c) = fwd.step(steps[static_cast<std::size_t>(t)], h, c);
    fwd_states[static_cast<std::size_t>(t)] = h;
  }
  std::vector<Tensor<S>> bwd_states(static_cast<std::size_t>(n));
  h = Tensor<S>::zeros({batch, h_dim});
  c = Tensor<S>::zeros({batch, h_dim});
  for (int t = n - 1; t >= 0; --t) {
    std::tie(h, c) = bwd.step(steps[static_cast<std::size_t>(t)], h, c);
    bwd_states[static_cast<std::size_t>(t)] = h;
  }

  EncodedBatch out;
  out.states.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    out.states.push_back(concat<S>({fwd_states[static_cast<std::size_t>(t)], bwd_states[static_cast<std::size_t>(t)]}, 1));
  }
  if (mode == FinalState::Last) {
    out.final_state = out.states.back();
  } else {
    Tensor<S> acc = out.states[0];
    for (int t = 1; t < n; ++t) acc = add(acc, out.states[static_cast<std::size_t>(t)]);
    out.final_state = affine(acc, S(1) / static_cast<S>(n), S(0));
  }
  return out;
}

template <typename S>
typename BiLstmEncoder<S>::Encoded BiLstmEncoder<S>::encode(const Tensor<S>& tokens, FinalState mode) const {
  if (tokens.rank() != 2) throw ShapeError("encode_sequence", "tokens must be [n, d]");
  const int n = tokens.dim(0);
  std::vector<Tensor<S>> steps;
  steps.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) steps.push_back(slice(tokens, 0, t, 1));
  EncodedBatch batch = encode_steps(steps, mode);
  Encoded enc;
  enc.states = concat(batch.states, 0);  // [n, 2H]
  enc.final_state = reshape(batch.final_state, {batch.final_state.dim(1)});
  return enc;
}

template <typename S>
AttentionLayer<S> AttentionLayer<S>::create(ParamResolver<S>& resolver, const std::string& prefix,
                                            int input_dim, int att_dim, Rng& rng) {
  AttentionLayer att;
  att.w_a = resolver.get_or_create(prefix + ".w_a", {input_dim, att_dim},
                                   [&](Tensor<S>& t) { xavier_uniform(t, input_dim, att_dim, rng); });
  att.w_s = resolver.get_or_create(prefix + ".w_s", {att_dim, 1},
                                   [&](Tensor<S>& t) { xavier_uniform(t, att_dim, 1, rng); });
  return att;
}

template <typename S>
std::pair<Tensor<S>, Tensor<S>> AttentionLayer<S>::attend(const Tensor<S>& context) const {
  if (context.rank() != 2 || context.dim(1) != w_a.dim(0)) {
    throw ShapeError("attend", "context " + shape_str(context.shape()) + " does not match W_a " + shape_str(w_a.shape()));
  }
  const int t_len = context.dim(0);
  Tensor<S> scores = matmul(tanh_op(matmul(context, w_a)), w_s);  // [T, 1]
  Tensor<S> weights = softmax(reshape(scores, {t_len}));          // [T]
  Tensor<S> rep = matmul(reshape(weights, {1, t_len}), context);  // [1, in]
  return {reshape(rep, {rep.dim(1)}), weights};
}

template <typename S>
FeedForwardHead<S> FeedForwardHead<S>::create(ParamResolver<S>& resolver, const std::string& prefix,
                                              const std::vector<int>& widths, bool batch_norm_after_first,
                                              Rng& rng) {
  if (widths.size() < 2) throw ConfigError("feed_forward", "need at least one layer");
  FeedForwardHead head;
  head.batch_norm_after_first = batch_norm_after_first;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l], out = widths[l + 1];
    const std::string tag = std::to_string(l + 1);
    head.weights.push_back(resolver.get_or_create(prefix + ".w" + tag, {in, out},
                                                  [&](Tensor<S>& t) { xavier_uniform(t, in, out, rng); }));
    head.biases.push_back(resolver.get_or_create(prefix + ".b" + tag, {out}, {}));
  }
  if (batch_norm_after_first) {
    const int f = widths[1];
    head.bn_gamma = resolver.get_or_create(prefix + ".bn.gamma", {f}, [](Tensor<S>& t) {
      for (S& v : t.values()) v = S(1);
    });
    head.bn_beta = resolver.get_or_create(prefix + ".bn.beta", {f}, {});
    head.bn_mean = resolver.get_or_create(prefix + ".bn.mean", {f}, {}, /*trainable=*/false);
    head.bn_var = resolver.get_or_create(prefix + ".bn.var", {f}, [](Tensor<S>& t) {
      for (S& v : t.values()) v = S(1);
    }, /*trainable=*/false);
  }
  return head;
}

template <typename S>
Tensor<S> FeedForwardHead<S>::forward(const Tensor<S>& x, bool training) const {
  Tensor<S> h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = relu(add(matmul(h, weights[l]), biases[l]));
    if (l == 0 && batch_norm_after_first) {
      Tensor<S> rm = bn_mean, rv = bn_var;  // handles to shared running buffers
      h = batch_norm(h, bn_gamma, bn_beta, rm, rv, training, bn_momentum, bn_eps);
    }
  }
  return h;
}

#define JKET_INSTANTIATE_BLOCKS(S)                                                                     \
  template struct RecurrentCell<S>;                                                                    \
  template struct BiLstmEncoder<S>;                                                                    \
  template struct AttentionLayer<S>;                                                                   \
  template struct FeedForwardHead<S>;                                                                  \
  template std::pair<Tensor<S>, Tensor<S>> lstm_step(const RecurrentCell<S>&, const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);

JKET_INSTANTIATE_BLOCKS(float)
JKET_INSTANTIATE_BLOCKS(double)

#undef JKET_INSTANTIATE_BLOCKS

}  // namespace jket
