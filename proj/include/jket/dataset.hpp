#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jket/kge.hpp"
#include "jket/typer.hpp"

namespace jket {

struct ReadStats {
  long records = 0;
  long skipped = 0;  // only under lenient mode
};

// Triple TSV: head \t relation \t tail [\t label], label in {1, -1} or
// {1, 0}; -1 normalizes to 0, a missing column means an implicit positive.
// Malformed lines raise FormatError naming file:line, or are counted and
// skipped under lenient mode.
std::vector<Triple> read_triples(const std::string& path, bool lenient = false, ReadStats* stats = nullptr);

// Typing JSON-lines: {"tokens": [...], "start": int, "end": int, "types": [...]}.
std::vector<TypingInstance> read_typing(const std::string& path, bool lenient = false, ReadStats* stats = nullptr);

// LM corpus: UTF-8, one sentence per line, whitespace tokens. The visitor
// form streams with bounded memory; blank lines are skipped.
void for_each_sentence(const std::string& path,
                       const std::function<void(std::vector<std::string>&&)>& visit);
std::vector<std::vector<std::string>> read_sentences(const std::string& path);

// Joint corpus JSON-lines: {"tokens": [...], "triples": [["h","r","t"], ...]}.
struct JointRecord {
  std::vector<std::string> tokens;
  std::vector<Triple> triples;
};
std::vector<JointRecord> read_joint(const std::string& path, bool lenient = false, ReadStats* stats = nullptr);

// Deterministic shuffled split; the three index lists are disjoint and cover
// 0..n-1 exhaustively.
struct SplitIndices {
  std::vector<std::size_t> train, dev, test;
};
SplitIndices split_indices(std::size_t n, double train_frac, double dev_frac, std::uint64_t seed);

}  // namespace jket
