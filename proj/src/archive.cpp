#include "jket/archive.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace jket {

namespace {

// Explicit little-endian packing keeps the wire format host-independent.
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

void put_string(std::string& out, const std::string& s) {
  put_u64(out, s.size());
  out.append(s);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  const std::string& path;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw IoError("load_model", path + ": truncated payload");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

ModelArchive ModelArchive::from_graph(const ModelGraph<float>& graph, const Vocabulary& vocab,
                                      std::string config_json, std::string extras_json) {
  ModelArchive archive;
  archive.config_json = std::move(config_json);
  archive.extras_json = std::move(extras_json);
  archive.vocab_tokens = vocab.tokens();
  for (const auto& [name, entry] : graph.entries()) {
    archive.tensors.emplace_back(name, entry.tensor);
  }
  return archive;
}

void save_archive(const ModelArchive& archive, const std::string& path) {
  std::string out;
  out.append("JKET");
  put_u32(out, ModelArchive::kVersion);
  put_string(out, archive.config_json);
  put_string(out, archive.extras_json);
  put_u64(out, archive.vocab_tokens.size());
  for (const std::string& token : archive.vocab_tokens) put_string(out, token);
  put_u64(out, archive.tensors.size());
  for (const auto& [name, tensor] : archive.tensors) {
    put_string(out, name);
    put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
    for (int d : tensor.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : tensor.values()) put_f32(out, v);
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("save_model", "cannot write " + tmp);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("save_model", "short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("save_model", "rename " + tmp + " -> " + path + ": " + ec.message());
}

ModelArchive load_archive(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("load_model", "cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  Reader r{buf, 0, path};
  r.need(4);
  if (buf.compare(0, 4, "JKET") != 0) throw FormatError("load_model", path + ": bad magic");
  r.pos = 4;
  const std::uint32_t version = r.u32();
  if (version != ModelArchive::kVersion) {
    throw FormatError("load_model", path + ": unsupported version " + std::to_string(version));
  }

  ModelArchive archive;
  archive.config_json = r.str();
  archive.extras_json = r.str();
  const std::uint64_t vocab_count = r.u64();
  archive.vocab_tokens.reserve(vocab_count);
  for (std::uint64_t i = 0; i < vocab_count; ++i) archive.vocab_tokens.push_back(r.str());
  const std::uint64_t tensor_count = r.u64();
  for (std::uint64_t i = 0; i < tensor_count; ++i) {
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int>(r.u32()));
    std::vector<float> values(shape_numel(shape));
    for (float& v : values) v = r.f32();
    archive.tensors.emplace_back(name, Tensor<float>::from_values(std::move(shape), std::move(values)));
  }
  if (r.pos != buf.size()) throw FormatError("load_model", path + ": trailing bytes");
  return archive;
}

void load_graph_values(ModelGraph<float>& graph, const ModelArchive& archive) {
  std::size_t applied = 0;
  for (const auto& [name, stored] : archive.tensors) {
    if (!graph.contains(name)) throw FormatError("load_model", "archive tensor has no graph slot: " + name);
    Tensor<float> dst = graph.get(name);
    if (dst.shape() != stored.shape()) {
      throw FormatError("load_model", "shape mismatch for " + name + ": " + shape_str(dst.shape()) + " vs " +
                                          shape_str(stored.shape()));
    }
    std::copy(stored.values().begin(), stored.values().end(), dst.values().begin());
    ++applied;
  }
  if (applied != graph.entries().size()) {
    throw FormatError("load_model", "archive is missing tensors for this configuration");
  }
}

}  // namespace jket
