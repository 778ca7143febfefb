#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "jket/error.hpp"

namespace jket {

// Separator token emitted between head/relation/tail of a tokenized triple.
// Uppercase on purpose: the identifier tokenizer lowercases everything, so no
// natural token can collide with it. It is an ordinary vocabulary entry, not
// a reserved index, and enters the vocabulary by frequency like any word.
inline const std::string kSepToken = "[SEP]";

// Token <-> index maps with four fixed specials at indices 0..3. Non-special
// entries are ranked by corpus frequency, ties broken lexicographically.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kSpecialCount = 4;

  static const std::array<std::string, 4>& special_tokens();

  // Rebuild from an explicit index-ordered token list (archive load). The
  // first four entries must be the specials.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int index(const std::string& token) const {
    auto it = token_to_index_.find(token);
    return it == token_to_index_.end() ? kUnk : it->second;
  }
  bool contains(const std::string& token) const { return token_to_index_.count(token) != 0; }
  const std::string& token(int index) const;
  int size() const { return static_cast<int>(index_to_token_.size()); }

  std::vector<int> encode(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const std::string& t : tokens) out.push_back(index(t));
    return out;
  }

  const std::vector<std::string>& tokens() const { return index_to_token_; }

 private:
  friend class VocabCounter;
  std::unordered_map<std::string, int> token_to_index_;
  std::vector<std::string> index_to_token_;
};

// Streaming frequency counter; feed any number of token streams, then build.
// Building keeps exactly the max_size most frequent tokens (fewer if the
// corpus is smaller) after the specials.
class VocabCounter {
 public:
  void add(const std::string& token);
  void add_all(const std::vector<std::string>& tokens) {
    for (const std::string& t : tokens) add(t);
  }
  std::size_t distinct() const { return counts_.size(); }
  bool empty() const { return total_ == 0; }

  Vocabulary build(std::size_t max_size) const;

 private:
  std::unordered_map<std::string, long long> counts_;
  long long total_ = 0;
};

// Tokenized triple: per-field word lists plus the flattened sequence
// head ++ [SEP] ++ relation ++ [SEP] ++ tail. Detokenization joins fields
// with underscores, so normal-form identifiers round-trip exactly.
struct TripleTokens {
  std::vector<std::string> head;
  std::vector<std::string> relation;
  std::vector<std::string> tail;

  std::vector<std::string> flattened() const;
  std::array<std::string, 3> detokenize() const;
};

// Splits an identifier on underscores, slashes and whitespace and lowercases
// it; "/people/person" and "Barack_Obama" both become plain word lists.
std::vector<std::string> split_identifier(const std::string& text);

std::vector<std::string> split_whitespace(const std::string& line);

TripleTokens tokenize_triple(const std::string& head, const std::string& relation, const std::string& tail);

}  // namespace jket
