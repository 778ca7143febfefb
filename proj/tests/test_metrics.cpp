#include <doctest.h>

#include "jket/error.hpp"
#include "jket/metrics.hpp"
#include "jket/rng.hpp"
#include "support/oracles.hpp"

using namespace jket;

namespace {

std::set<int> random_set(Rng& rng, int type_count, int max_size) {
  std::set<int> s;
  const int n = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_size + 1)));
  for (int i = 0; i < n; ++i) s.insert(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(type_count))));
  return s;
}

}  // namespace

TEST_CASE("perfect and degenerate scorers") {
  const std::vector<double> scores = {1.0, 1.0, 0.0, 0.0};
  const std::vector<int> labels = {1, 1, 0, 0};
  const std::vector<int> preds = {1, 1, 0, 0};
  const BinaryMetrics m = binary_metrics(scores, preds, labels);
  CHECK(m.accuracy == 1.0);
  CHECK(m.f1 == 1.0);
  CHECK(*m.auroc == 1.0);
  CHECK(*m.aucpr == 1.0);

  // constant scorer on a balanced set: AUROC exactly one half by tie-averaging
  const std::vector<double> flat = {0.5, 0.5, 0.5, 0.5};
  CHECK(auroc_rank(flat, labels) == doctest::Approx(0.5).epsilon(1e-12));

  // single-class data: rank metrics reported absent, not zero
  const BinaryMetrics single = binary_metrics({0.3, 0.7}, {0, 1}, {1, 1});
  CHECK(!single.auroc.has_value());
  CHECK(single.aucpr.has_value());
  const BinaryMetrics none = binary_metrics({0.3, 0.7}, {0, 1}, {0, 0});
  CHECK(!none.auroc.has_value());
  CHECK(!none.aucpr.has_value());
}

TEST_CASE("rank metrics match brute-force oracles on random instances") {
  Rng rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 20;
    std::vector<double> scores(n);
    std::vector<int> labels(n), preds(n);
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      // quantized scores force tie handling through both paths
      scores[static_cast<std::size_t>(i)] = static_cast<double>(rng.next_below(8)) / 8.0;
      labels[static_cast<std::size_t>(i)] = rng.next_bool() ? 1 : 0;
      preds[static_cast<std::size_t>(i)] = rng.next_bool() ? 1 : 0;
      has_pos = has_pos || labels[static_cast<std::size_t>(i)] == 1;
      has_neg = has_neg || labels[static_cast<std::size_t>(i)] == 0;
    }
    if (!has_pos || !has_neg) continue;

    CHECK(auroc_rank(scores, labels) == doctest::Approx(oracle::auroc_pairwise(scores, labels)).epsilon(1e-9));
    CHECK(aucpr_step(scores, labels) == doctest::Approx(oracle::aucpr_sweep(scores, labels)).epsilon(1e-9));

    const BinaryMetrics m = binary_metrics(scores, preds, labels);
    const oracle::Prf p = oracle::prf_counts(preds, labels);
    CHECK(m.accuracy == doctest::Approx(p.accuracy).epsilon(1e-12));
    CHECK(m.precision == doctest::Approx(p.precision).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(p.recall).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(p.f1).epsilon(1e-12));
  }
}

TEST_CASE("typing metrics: hand-worked cases") {
  // identical prediction and gold: all three F1 are 1
  std::vector<std::set<int>> gold = {{0, 2}, {1}, {0}};
  const TypingMetrics perfect = typing_metrics(gold, gold);
  CHECK(perfect.strict_f1 == 1.0);
  CHECK(perfect.loose_macro_f1 == 1.0);
  CHECK(perfect.loose_micro_f1 == 1.0);

  // one instance, gold {a,b}, predicted {a}
  const TypingMetrics partial = typing_metrics({{0}}, {{0, 1}});
  CHECK(partial.loose_macro_precision == doctest::Approx(1.0));
  CHECK(partial.loose_macro_recall == doctest::Approx(0.5));
  CHECK(partial.loose_macro_f1 == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(partial.strict_f1 == 0.0);
}

TEST_CASE("typing metrics match the set-arithmetic oracle on random corpora") {
  Rng rng(103);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::set<int>> pred, gold;
    for (int i = 0; i < 20; ++i) {
      pred.push_back(random_set(rng, 6, 3));
      std::set<int> g = random_set(rng, 6, 3);
      g.insert(static_cast<int>(rng.next_below(6)));  // gold never empty in our corpora
      gold.push_back(g);
    }
    const TypingMetrics m = typing_metrics(pred, gold);
    const oracle::TypingScores o = oracle::typing_sets(pred, gold);
    CHECK(m.strict_f1 == doctest::Approx(o.strict_f1).epsilon(1e-9));
    CHECK(m.loose_macro_precision == doctest::Approx(o.macro_p).epsilon(1e-9));
    CHECK(m.loose_macro_recall == doctest::Approx(o.macro_r).epsilon(1e-9));
    CHECK(m.loose_macro_f1 == doctest::Approx(o.macro_f1).epsilon(1e-9));
    CHECK(m.loose_micro_precision == doctest::Approx(o.micro_p).epsilon(1e-9));
    CHECK(m.loose_micro_recall == doctest::Approx(o.micro_r).epsilon(1e-9));
    CHECK(m.loose_micro_f1 == doctest::Approx(o.micro_f1).epsilon(1e-9));

    // strictness dominance against the macro variant holds unconditionally:
    // an exact match contributes 1 to both per-instance ratios
    CHECK(m.strict_f1 <= m.loose_macro_f1 + 1e-12);
  }
}

TEST_CASE("eval report json round trip ignores only the timestamp") {
  EvalReport r;
  r.task = "kge";
  r.dataset = "dev.tsv";
  r.seed = 7;
  r.timestamp = iso8601_now();
  r.metrics["accuracy"] = 0.75;
  r.metrics["auroc"] = 0.5;
  r.validate();

  EvalReport back = EvalReport::from_json(r.to_json());
  CHECK(back.same_results(r));
  back.timestamp = "2099-01-01T00:00:00Z";
  CHECK(back.same_results(r));
  back.metrics["accuracy"] = 0.5;
  CHECK(!back.same_results(r));

  EvalReport bad;
  bad.metrics["accuracy"] = 1.5;
  CHECK_THROWS_AS(bad.validate(), DataError);
  EvalReport low_ppl;
  low_ppl.metrics["perplexity"] = 0.3;
  CHECK_THROWS_AS(low_ppl.validate(), DataError);
}
