#include "jket/dataset.hpp"

#include <fstream>

#include <json.hpp>

#include "jket/rng.hpp"

namespace jket {

namespace {

std::string at_line(const std::string& path, long line) {
  return path + ":" + std::to_string(line);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<Triple> read_triples(const std::string& path, bool lenient, ReadStats* stats) {
  std::ifstream in(path);
  if (!in) throw IoError("read_triples", "cannot open " + path);
  std::vector<Triple> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const std::vector<std::string> cols = split_tabs(line);
      if (cols.size() != 3 && cols.size() != 4) {
        throw FormatError("read_triples", at_line(path, line_no) + ": expected 3 or 4 columns, got " + std::to_string(cols.size()));
      }
      Triple t;
      t.head = cols[0];
      t.relation = cols[1];
      t.tail = cols[2];
      if (t.head.empty() || t.relation.empty() || t.tail.empty()) {
        throw FormatError("read_triples", at_line(path, line_no) + ": empty field");
      }
      if (cols.size() == 4) {
        if (cols[3] == "1") {
          t.label = 1;
        } else if (cols[3] == "-1" || cols[3] == "0") {
          t.label = 0;
        } else {
          throw FormatError("read_triples", at_line(path, line_no) + ": bad label '" + cols[3] + "'");
        }
      }
      out.push_back(std::move(t));
      if (stats) ++stats->records;
    } catch (const FormatError&) {
      if (!lenient) throw;
      if (stats) ++stats->skipped;
    }
  }
  return out;
}

std::vector<TypingInstance> read_typing(const std::string& path, bool lenient, ReadStats* stats) {
  std::ifstream in(path);
  if (!in) throw IoError("read_typing", "cannot open " + path);
  std::vector<TypingInstance> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw FormatError("read_typing", at_line(path, line_no) + ": invalid JSON record");
      }
      if (!j.contains("tokens") || !j.contains("start") || !j.contains("end") || !j.contains("types")) {
        throw FormatError("read_typing", at_line(path, line_no) + ": missing tokens/start/end/types");
      }
      TypingInstance inst;
      for (const auto& t : j["tokens"]) inst.tokens.push_back(t.get<std::string>());
      inst.start = j["start"].get<int>();
      inst.end = j["end"].get<int>();
      for (const auto& t : j["types"]) inst.types.push_back(t.get<std::string>());
      if (inst.start < 0 || inst.end <= inst.start || inst.end > static_cast<int>(inst.tokens.size())) {
        throw FormatError("read_typing", at_line(path, line_no) + ": invalid span [" + std::to_string(inst.start) +
                                             "," + std::to_string(inst.end) + ")");
      }
      if (inst.types.empty()) {
        throw FormatError("read_typing", at_line(path, line_no) + ": no gold types");
      }
      out.push_back(std::move(inst));
      if (stats) ++stats->records;
    } catch (const FormatError&) {
      if (!lenient) throw;
      if (stats) ++stats->skipped;
    } catch (const nlohmann::json::exception& e) {
      if (!lenient) throw FormatError("read_typing", at_line(path, line_no) + ": " + e.what());
      if (stats) ++stats->skipped;
    }
  }
  return out;
}

void for_each_sentence(const std::string& path,
                       const std::function<void(std::vector<std::string>&&)>& visit) {
  std::ifstream in(path);
  if (!in) throw IoError("read_sentences", "cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> tokens = split_whitespace(line);
    if (tokens.empty()) continue;
    visit(std::move(tokens));
  }
}

std::vector<std::vector<std::string>> read_sentences(const std::string& path) {
  std::vector<std::vector<std::string>> out;
  for_each_sentence(path, [&](std::vector<std::string>&& tokens) { out.push_back(std::move(tokens)); });
  return out;
}

std::vector<JointRecord> read_joint(const std::string& path, bool lenient, ReadStats* stats) {
  std::ifstream in(path);
  if (!in) throw IoError("read_joint", "cannot open " + path);
  std::vector<JointRecord> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("tokens") || !j.contains("triples")) {
        throw FormatError("read_joint", at_line(path, line_no) + ": expected {tokens, triples}");
      }
      JointRecord rec;
      for (const auto& t : j["tokens"]) rec.tokens.push_back(t.get<std::string>());
      if (rec.tokens.empty()) throw FormatError("read_joint", at_line(path, line_no) + ": empty sentence");
      for (const auto& arr : j["triples"]) {
        if (!arr.is_array() || arr.size() != 3) {
          throw FormatError("read_joint", at_line(path, line_no) + ": triples must be [head, relation, tail]");
        }
        Triple t;
        t.head = arr[0].get<std::string>();
        t.relation = arr[1].get<std::string>();
        t.tail = arr[2].get<std::string>();
        if (t.head.empty() || t.relation.empty() || t.tail.empty()) {
          throw FormatError("read_joint", at_line(path, line_no) + ": empty triple field");
        }
        rec.triples.push_back(std::move(t));
      }
      out.push_back(std::move(rec));
      if (stats) ++stats->records;
    } catch (const FormatError&) {
      if (!lenient) throw;
      if (stats) ++stats->skipped;
    } catch (const nlohmann::json::exception& e) {
      if (!lenient) throw FormatError("read_joint", at_line(path, line_no) + ": " + e.what());
      if (stats) ++stats->skipped;
    }
  }
  return out;
}

SplitIndices split_indices(std::size_t n, double train_frac, double dev_frac, std::uint64_t seed) {
  if (n == 0) throw DataError("split", "empty corpus");
  if (train_frac <= 0 || dev_frac < 0 || train_frac + dev_frac >= 1.0) {
    throw ConfigError("split", "fractions must satisfy 0 < train, 0 <= dev, train + dev < 1");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng::derived(seed, "corpus-split");
  shuffle(order, rng);
  const std::size_t train_end = static_cast<std::size_t>(train_frac * static_cast<double>(n));
  const std::size_t dev_end = static_cast<std::size_t>((train_frac + dev_frac) * static_cast<double>(n));
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + static_cast<long>(train_end));
  split.dev.assign(order.begin() + static_cast<long>(train_end), order.begin() + static_cast<long>(dev_end));
  split.test.assign(order.begin() + static_cast<long>(dev_end), order.end());
  return split;
}

}  // namespace jket
