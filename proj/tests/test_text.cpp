#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "jket/embeddings.hpp"
#include "jket/rng.hpp"
#include "jket/vocab.hpp"

using namespace jket;

namespace {

Vocabulary build_from(const std::vector<std::vector<std::string>>& streams, std::size_t max_size) {
  VocabCounter counter;
  for (const auto& s : streams) counter.add_all(s);
  return counter.build(max_size);
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents) {
    path = std::string("/tmp/jket_text_") + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".txt";
    std::ofstream f(path);
    f << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("vocabulary frequency order with lexicographic ties") {
  Vocabulary v = build_from({{"a", "a", "b"}}, 10);
  CHECK(v.size() == Vocabulary::kSpecialCount + 2);
  CHECK(v.index("a") < v.index("b"));
  CHECK(v.index("a") == Vocabulary::kSpecialCount);

  Vocabulary tie = build_from({{"b", "a"}}, 10);  // equal counts: a first
  CHECK(tie.index("a") < tie.index("b"));
}

TEST_CASE("vocabulary keeps exactly max_size most frequent words") {
  std::vector<std::string> stream;
  for (int i = 0; i < 100; ++i) {
    for (int k = 0; k <= i % 7; ++k) stream.push_back("tok" + std::to_string(i));
  }
  Vocabulary v = build_from({stream}, 70);
  CHECK(v.size() == 70 + Vocabulary::kSpecialCount);

  // same rule at the 70k scale is structural: distinct > max_size keeps
  // max_size + 4 entries
  Vocabulary small = build_from({{"x", "y", "z"}}, 2);
  CHECK(small.size() == 2 + Vocabulary::kSpecialCount);
  CHECK(small.index("x") != Vocabulary::kUnk);
  CHECK(small.index("z") == Vocabulary::kUnk);  // z sorts last on the count tie
}

TEST_CASE("empty corpus is a data error") {
  VocabCounter counter;
  CHECK_THROWS_AS(counter.build(10), DataError);
}

TEST_CASE("vocabulary build is order-independent across equal-frequency streams") {
  Vocabulary ab = build_from({{"x", "y"}, {"y", "z", "x"}}, 10);
  Vocabulary ba = build_from({{"y", "z", "x"}, {"x", "y"}}, 10);
  REQUIRE(ab.size() == ba.size());
  for (int i = 0; i < ab.size(); ++i) CHECK(ab.token(i) == ba.token(i));
}

TEST_CASE("specials are fixed and never evicted") {
  Vocabulary v = build_from({{"a"}}, 1);
  CHECK(v.token(Vocabulary::kPad) == "<pad>");
  CHECK(v.token(Vocabulary::kUnk) == "<unk>");
  CHECK(v.token(Vocabulary::kBos) == "<bos>");
  CHECK(v.token(Vocabulary::kEos) == "<eos>");
  CHECK(v.index("never-seen") == Vocabulary::kUnk);

  // literal special surface forms in a corpus do not create duplicates
  Vocabulary v2 = build_from({{"<unk>", "word", "<pad>"}}, 10);
  CHECK(v2.size() == Vocabulary::kSpecialCount + 1);
}

TEST_CASE("triple tokenization splits identifiers and round-trips") {
  TripleTokens t = tokenize_triple("barack_obama", "profession", "politician");
  CHECK(t.flattened() == std::vector<std::string>{"barack", "obama", kSepToken, "profession", kSepToken, "politician"});

  TripleTokens abc = tokenize_triple("a", "b", "c");
  CHECK(abc.flattened().size() == 5);
  const auto back = abc.detokenize();
  CHECK(back[0] == "a");
  CHECK(back[1] == "b");
  CHECK(back[2] == "c");

  TripleTokens slashes = tokenize_triple("/people/Person", "/people/person/Profession", "Politician");
  CHECK(slashes.head == std::vector<std::string>{"people", "person"});
  CHECK(slashes.tail == std::vector<std::string>{"politician"});

  CHECK_THROWS_AS(tokenize_triple("/person/politician", "", "x"), DataError);
  CHECK_THROWS_AS(tokenize_triple("___", "r", "x"), DataError);
}

TEST_CASE("tokenize/detokenize round trip over a normal-form corpus") {
  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    auto word = [&]() {
      std::string w;
      const int len = 1 + static_cast<int>(rng.next_below(6));
      for (int k = 0; k < len; ++k) w.push_back(static_cast<char>('a' + rng.next_below(26)));
      return w;
    };
    auto ident = [&]() {
      std::string s = word();
      const int extra = static_cast<int>(rng.next_below(3));
      for (int k = 0; k < extra; ++k) s += "_" + word();
      return s;
    };
    const std::string h = ident(), r = ident(), t = ident();
    const auto back = tokenize_triple(h, r, t).detokenize();
    CHECK(back[0] == h);
    CHECK(back[1] == r);
    CHECK(back[2] == t);
  }
}

TEST_CASE("pretrained rows copied verbatim, absent rows seeded reproducibly") {
  TempFile file("cat 1.0 2.0\ndog -0.5 0.25\nunrelated 9 9\n");
  Vocabulary v = build_from({{"cat", "dog", "fish"}}, 10);

  EmbeddingTable<float> a = load_pretrained<float>(file.path, v, 123);
  CHECK(a.dim == 2);
  CHECK(a.matched == 2);
  CHECK(a.filled == v.size() - 2);
  const float* cat = a.matrix.values().data() + static_cast<std::size_t>(v.index("cat")) * 2;
  CHECK(cat[0] == 1.0f);
  CHECK(cat[1] == 2.0f);
  const float* dog = a.matrix.values().data() + static_cast<std::size_t>(v.index("dog")) * 2;
  CHECK(dog[0] == -0.5f);
  CHECK(dog[1] == 0.25f);

  const float* fish = a.matrix.values().data() + static_cast<std::size_t>(v.index("fish")) * 2;
  CHECK(fish[0] >= -0.05f);
  CHECK(fish[0] <= 0.05f);

  // bit-exact regeneration under the same seed; different seed differs
  EmbeddingTable<float> b = load_pretrained<float>(file.path, v, 123);
  CHECK(std::vector<float>(a.matrix.values().begin(), a.matrix.values().end()) ==
        std::vector<float>(b.matrix.values().begin(), b.matrix.values().end()));
  EmbeddingTable<float> c = load_pretrained<float>(file.path, v, 124);
  CHECK(std::vector<float>(a.matrix.values().begin(), a.matrix.values().end()) !=
        std::vector<float>(c.matrix.values().begin(), c.matrix.values().end()));
}

TEST_CASE("malformed pretrained rows name the line") {
  Vocabulary v = build_from({{"cat"}}, 4);
  {
    TempFile bad("cat 1.0 2.0\ncat 1.0\n");
    try {
      load_pretrained<float>(bad.path, v, 1);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
  }
  CHECK_THROWS_AS(load_pretrained<float>("/nonexistent/vectors.txt", v, 1), IoError);
  {
    TempFile garbage("cat 1.0 banana\n");
    CHECK_THROWS_AS(load_pretrained<float>(garbage.path, v, 1), FormatError);
  }
}
