#include "jket/vocab.hpp"

#include <algorithm>
#include <cctype>

namespace jket {

const std::array<std::string, 4>& Vocabulary::special_tokens() {
  static const std::array<std::string, 4> kSpecials = {"<pad>", "<unk>", "<bos>", "<eos>"};
  return kSpecials;
}

const std::string& Vocabulary::token(int index) const {
  if (index < 0 || index >= size()) throw UsageError("vocabulary", "index out of range: " + std::to_string(index));
  return index_to_token_[static_cast<std::size_t>(index)];
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kSpecialCount) throw DataError("vocabulary", "token list smaller than the special set");
  for (int i = 0; i < kSpecialCount; ++i) {
    if (tokens[static_cast<std::size_t>(i)] != special_tokens()[static_cast<std::size_t>(i)]) {
      throw DataError("vocabulary", "token list does not start with the special tokens");
    }
  }
  Vocabulary v;
  v.index_to_token_ = std::move(tokens);
  for (std::size_t i = 0; i < v.index_to_token_.size(); ++i) {
    if (!v.token_to_index_.emplace(v.index_to_token_[i], static_cast<int>(i)).second) {
      throw DataError("vocabulary", "duplicate token: " + v.index_to_token_[i]);
    }
  }
  return v;
}

void VocabCounter::add(const std::string& token) {
  if (token.empty()) return;
  for (const std::string& s : Vocabulary::special_tokens()) {
    if (token == s) return;  // surface forms of specials never count as words
  }
  ++counts_[token];
  ++total_;
}

Vocabulary VocabCounter::build(std::size_t max_size) const {
  if (max_size == 0) throw DataError("build_vocabulary", "max_size must be positive");
  if (total_ == 0) throw DataError("build_vocabulary", "empty corpus");
  std::vector<std::pair<std::string, long long>> ranked(counts_.begin(), counts_.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > max_size) ranked.resize(max_size);

  std::vector<std::string> tokens(Vocabulary::special_tokens().begin(), Vocabulary::special_tokens().end());
  tokens.reserve(tokens.size() + ranked.size());
  for (auto& [tok, cnt] : ranked) tokens.push_back(tok);
  return Vocabulary::from_tokens(std::move(tokens));
}

std::vector<std::string> split_identifier(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '_' || c == '/' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::string> TripleTokens::flattened() const {
  std::vector<std::string> out;
  out.reserve(head.size() + relation.size() + tail.size() + 2);
  out.insert(out.end(), head.begin(), head.end());
  out.push_back(kSepToken);
  out.insert(out.end(), relation.begin(), relation.end());
  out.push_back(kSepToken);
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

namespace {
std::string join_underscore(const std::vector<std::string>& parts) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s += "_";
    s += parts[i];
  }
  return s;
}
}  // namespace

std::array<std::string, 3> TripleTokens::detokenize() const {
  return {join_underscore(head), join_underscore(relation), join_underscore(tail)};
}

TripleTokens tokenize_triple(const std::string& head, const std::string& relation, const std::string& tail) {
  TripleTokens t;
  t.head = split_identifier(head);
  t.relation = split_identifier(relation);
  t.tail = split_identifier(tail);
  if (t.head.empty()) throw DataError("tokenize_triple", "empty head");
  if (t.relation.empty()) throw DataError("tokenize_triple", "empty relation");
  if (t.tail.empty()) throw DataError("tokenize_triple", "empty tail");
  return t;
}

}  // namespace jket
