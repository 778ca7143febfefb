#pragma once

#include <string>
#include <utility>
#include <vector>

#include "jket/model_graph.hpp"
#include "jket/vocab.hpp"

namespace jket {

// Binary model container. Layout, all little-endian:
//   magic "JKET" | u32 version | config JSON | extras JSON | vocabulary
//   tokens in index order | named tensors (name, rank, dims, f32 values).
// Write -> read reproduces every tensor bit-exactly and the vocabulary order
// exactly. Writes go to a temp file renamed into place.
struct ModelArchive {
  static constexpr std::uint32_t kVersion = 1;

  std::string config_json;
  std::string extras_json;  // thresholds, type inventory, anything task-specific
  std::vector<std::string> vocab_tokens;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;  // name-sorted

  static ModelArchive from_graph(const ModelGraph<float>& graph, const Vocabulary& vocab,
                                 std::string config_json, std::string extras_json);
};

void save_archive(const ModelArchive& archive, const std::string& path);
ModelArchive load_archive(const std::string& path);

// Copies archived values into same-named graph entries. Every graph entry
// must be present with a matching shape; aliased entries are stored under
// both names and load consistently.
void load_graph_values(ModelGraph<float>& graph, const ModelArchive& archive);

}  // namespace jket
