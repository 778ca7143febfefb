#pragma once

#include <string>
#include <utility>
#include <vector>

#include "jket/model_graph.hpp"
#include "jket/ops.hpp"

namespace jket {

enum class CellKind { Lstm, SimpleRnn };
enum class FinalState { Last, Mean };

CellKind cell_kind_from_string(const std::string& s);
FinalState final_state_from_string(const std::string& s);

// Recurrent cell over batched rows. LSTM packs the four gates (order
// i, f, g, o) into single matrices; the forget-gate bias starts at 1. The
// SimpleRnn variant is the plain tanh recurrence the gated equations reduce
// to, kept selectable for ablation.
template <typename S>
struct RecurrentCell {
  CellKind kind = CellKind::Lstm;
  int input_dim = 0;
  int hidden = 0;
  Tensor<S> w_x;   // [d, 4H] (lstm) or [d, H] (simple)
  Tensor<S> w_h;   // [H, 4H] or [H, H]
  Tensor<S> bias;  // [4H] or [H]

  static RecurrentCell create(ParamResolver<S>& resolver, const std::string& prefix, CellKind kind,
                              int input_dim, int hidden, Rng& rng);

  // x [B, d], h_prev [B, H], c_prev [B, H] -> (h, c)
  std::pair<Tensor<S>, Tensor<S>> step(const Tensor<S>& x, const Tensor<S>& h_prev, const Tensor<S>& c_prev) const;
};

// Single-example convenience wrapper: x [d], h_prev [H], c_prev [H].
template <typename S>
std::pair<Tensor<S>, Tensor<S>> lstm_step(const RecurrentCell<S>& cell, const Tensor<S>& x,
                                          const Tensor<S>& h_prev, const Tensor<S>& c_prev);

template <typename S>
struct BiLstmEncoder {
  RecurrentCell<S> fwd;
  RecurrentCell<S> bwd;

  static BiLstmEncoder create(ParamResolver<S>& resolver, const std::string& prefix, CellKind kind,
                              int input_dim, int hidden, Rng& rng);

  int output_width() const { return 2 * fwd.hidden; }

  struct Encoded {
    Tensor<S> states;       // [n, 2H]
    Tensor<S> final_state;  // [2H]
  };
  // tokens [n, d]; final_state is the rightmost concatenated state (or the
  // position mean when mode == Mean).
  Encoded encode(const Tensor<S>& tokens, FinalState mode = FinalState::Last) const;

  struct EncodedBatch {
    std::vector<Tensor<S>> states;  // per position, [B, 2H]
    Tensor<S> final_state;          // [B, 2H]
  };
  // Uniform-length batch: steps[t] is the [B, d] input at position t.
  EncodedBatch encode_steps(const std::vector<Tensor<S>>& steps, FinalState mode = FinalState::Last) const;
};

// a_i = softmax(w_s . tanh(C_i W_a)) with one (W_a, w_s) shared across all
// positions; the representation is the a-weighted sum of context rows.
template <typename S>
struct AttentionLayer {
  Tensor<S> w_a;  // [in, A]
  Tensor<S> w_s;  // [A, 1]

  static AttentionLayer create(ParamResolver<S>& resolver, const std::string& prefix, int input_dim,
                               int att_dim, Rng& rng);

  // context [T, in] -> (representation [in], weights [T])
  std::pair<Tensor<S>, Tensor<S>> attend(const Tensor<S>& context) const;
};

// Stack of affine+ReLU layers, optionally with batch normalization between
// the first and second layers (running stats are graph entries so they
// serialize with the model).
template <typename S>
struct FeedForwardHead {
  std::vector<Tensor<S>> weights;
  std::vector<Tensor<S>> biases;
  bool batch_norm_after_first = false;
  Tensor<S> bn_gamma, bn_beta, bn_mean, bn_var;
  S bn_momentum = S(0.9);
  S bn_eps = S(1e-5);

  // widths = {in, w1, ..., wL}
  static FeedForwardHead create(ParamResolver<S>& resolver, const std::string& prefix,
                                const std::vector<int>& widths, bool batch_norm_after_first, Rng& rng);

  int layer_count() const { return static_cast<int>(weights.size()); }
  int output_width() const { return weights.back().dim(1); }

  Tensor<S> forward(const Tensor<S>& x, bool training) const;  // x [B, in] -> [B, wL]
};

}  // namespace jket
