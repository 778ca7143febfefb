#include "jket/embeddings.hpp"

#include <cstdlib>
#include <fstream>
#include <vector>

#include "jket/rng.hpp"

namespace jket {

namespace {

// One init stream per table, unmatched rows visited in index order;
// deterministic per (seed, vocab, file).
template <typename S>
void fill_row(Tensor<S>& m, int row, int dim, Rng& rng) {
  S* p = m.values().data() + static_cast<std::size_t>(row) * dim;
  for (int j = 0; j < dim; ++j) p[j] = static_cast<S>(rng.next_uniform(-0.05, 0.05));
}

}  // namespace

template <typename S>
EmbeddingTable<S> random_embeddings(const Vocabulary& vocab, int dim, std::uint64_t seed) {
  if (dim <= 0) throw ConfigError("embeddings", "dimension must be positive");
  EmbeddingTable<S> table;
  table.dim = dim;
  table.matrix = Tensor<S>::zeros({vocab.size(), dim});
  Rng rng = Rng::derived(seed, "embedding-init");
  for (int i = 0; i < vocab.size(); ++i) fill_row(table.matrix, i, dim, rng);
  table.filled = vocab.size();
  return table;
}

template <typename S>
EmbeddingTable<S> load_pretrained(const std::string& path, const Vocabulary& vocab, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw IoError("load_pretrained", "cannot open " + path);

  int dim = -1;
  std::vector<std::pair<int, std::vector<S>>> rows;  // (vocab index, values)
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    // token, then whitespace-separated floats
    std::size_t pos = line.find_first_of(" \t");
    if (pos == std::string::npos) {
      throw FormatError("load_pretrained", path + ":" + std::to_string(line_no) + ": no vector values");
    }
    std::string token = line.substr(0, pos);
    std::vector<S> values;
    const char* p = line.c_str() + pos;
    char* end = nullptr;
    for (;;) {
      double v = std::strtod(p, &end);
      if (end == p) break;
      values.push_back(static_cast<S>(v));
      p = end;
    }
    while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
    if (*p != '\0') {
      throw FormatError("load_pretrained", path + ":" + std::to_string(line_no) + ": trailing garbage");
    }
    if (dim < 0) {
      if (values.empty()) throw FormatError("load_pretrained", path + ":" + std::to_string(line_no) + ": no vector values");
      dim = static_cast<int>(values.size());
    } else if (static_cast<int>(values.size()) != dim) {
      throw FormatError("load_pretrained", path + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                                               " values, got " + std::to_string(values.size()));
    }
    if (vocab.contains(token)) rows.emplace_back(vocab.index(token), std::move(values));
  }
  if (dim < 0) throw FormatError("load_pretrained", path + ": no vector rows");

  EmbeddingTable<S> table;
  table.dim = dim;
  table.matrix = Tensor<S>::zeros({vocab.size(), dim});
  std::vector<char> matched(static_cast<std::size_t>(vocab.size()), 0);
  for (auto& [idx, values] : rows) {
    S* dst = table.matrix.values().data() + static_cast<std::size_t>(idx) * dim;
    for (int j = 0; j < dim; ++j) dst[j] = values[static_cast<std::size_t>(j)];
    matched[static_cast<std::size_t>(idx)] = 1;
  }
  Rng rng = Rng::derived(seed, "embedding-init");
  for (int i = 0; i < vocab.size(); ++i) {
    if (matched[static_cast<std::size_t>(i)]) {
      ++table.matched;
    } else {
      fill_row(table.matrix, i, dim, rng);
      ++table.filled;
    }
  }
  return table;
}

template struct EmbeddingTable<float>;
template struct EmbeddingTable<double>;
template EmbeddingTable<float> random_embeddings(const Vocabulary&, int, std::uint64_t);
template EmbeddingTable<double> random_embeddings(const Vocabulary&, int, std::uint64_t);
template EmbeddingTable<float> load_pretrained(const std::string&, const Vocabulary&, std::uint64_t);
template EmbeddingTable<double> load_pretrained(const std::string&, const Vocabulary&, std::uint64_t);

}  // namespace jket
