#pragma once

#include <cstdint>
#include <string>

#include "jket/tensor.hpp"
#include "jket/vocab.hpp"

namespace jket {

// Word-vector matrix aligned with a Vocabulary: row i is the vector of token
// i. Rows found in a pretrained file carry the file's values verbatim; all
// other rows (specials included) are drawn from U(-0.05, 0.05) with the run
// seed, so regeneration with the same seed is bit-exact.
template <typename S>
struct EmbeddingTable {
  Tensor<S> matrix;  // [vocab_size, dim]
  int dim = 0;
  bool trainable = true;
  long matched = 0;  // rows copied from the pretrained file
  long filled = 0;   // rows drawn from the init distribution
};

template <typename S>
EmbeddingTable<S> random_embeddings(const Vocabulary& vocab, int dim, std::uint64_t seed);

// GloVe text format: one `token v1 ... vd` row per line, no header; d is
// fixed by the first row. Inconsistent arity raises FormatError naming the
// line; an unreadable path raises IoError.
template <typename S>
EmbeddingTable<S> load_pretrained(const std::string& path, const Vocabulary& vocab, std::uint64_t seed);

}  // namespace jket
