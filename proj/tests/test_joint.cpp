#include <doctest.h>

#include <cstring>

#include "jket/joint.hpp"

using namespace jket;

namespace {

struct ToyWorld {
  std::vector<Triple> triples;
  std::vector<std::vector<std::string>> sentences;
  std::vector<TypingInstance> mentions;
  Vocabulary vocab;
  TypeInventory types;

  static ToyWorld make() {
    ToyWorld w;
    const std::vector<std::string> people = {"ada", "grace", "alan", "kurt"};
    const std::vector<std::string> films = {"vector", "tensor", "matrix"};
    for (std::size_t i = 0; i < people.size(); ++i) {
      w.triples.push_back({people[i], "directed", films[i % films.size()], 1});
      w.sentences.push_back({people[i], "directed", films[i % films.size()], "."});
      TypingInstance inst;
      inst.tokens = w.sentences.back();
      inst.start = 0;
      inst.end = 1;
      inst.types = {"/person"};
      w.mentions.push_back(inst);
    }
    VocabCounter counter;
    for (const auto& s : w.sentences) counter.add_all(s);
    for (const Triple& t : w.triples) counter.add_all(tokenize_triple(t.head, t.relation, t.tail).flattened());
    w.vocab = counter.build(1000);
    w.types = TypeInventory::from_instances(w.mentions);
    return w;
  }
};

KgeConfig small_kge() {
  KgeConfig cfg;
  cfg.embed_dim = 6;
  cfg.hidden = 5;
  cfg.head_hidden = {8, 8};
  return cfg;
}

LmConfig small_lm() {
  LmConfig cfg;
  cfg.embed_dim = 6;
  cfg.hidden = 5;
  return cfg;
}

TyperConfig small_typer() {
  TyperConfig cfg;
  cfg.embed_dim = 6;
  cfg.hidden = 5;
  cfg.attention = 4;
  cfg.head_hidden = {8, 8, 8};
  return cfg;
}

std::vector<float> snapshot(const Tensor<float>& t) {
  return {t.values().begin(), t.values().end()};
}

std::vector<SentenceExample> wrapped(const ToyWorld& w) {
  std::vector<SentenceExample> out;
  for (const auto& s : w.sentences) out.push_back(wrap_sentence(s, w.vocab));
  return out;
}

}  // namespace

TEST_CASE("shared forward cell: one storage under two names") {
  ToyWorld w = ToyWorld::make();
  EmbeddingTable<float> table = random_embeddings<float>(w.vocab, 6, 5);
  JointKgeLm joint = build_joint_kge_lm(small_kge(), small_lm(), SharingPlanKind::KgeLmSharedForwardCell,
                                        w.vocab, table, 42);

  CHECK(joint.kge.fwd.w_x.shares_storage(joint.lm.cell.w_x));
  CHECK(joint.kge.embedding.shares_storage(joint.lm.embedding));
  CHECK(!joint.kge.bwd.w_x.shares_storage(joint.lm.cell.w_x));

  // mutating through the LM handle is observed bit-identically through KGE
  joint.lm.cell.w_x.values()[0] = 123.5f;
  CHECK(joint.kge.fwd.w_x.values()[0] == 123.5f);
  CHECK(aliases_bit_identical(joint.graph, joint.aliases));
}

TEST_CASE("fully shared LSTM plan forces the unidirectional KGE encoder") {
  ToyWorld w = ToyWorld::make();
  EmbeddingTable<float> table = random_embeddings<float>(w.vocab, 6, 5);
  JointKgeLm joint = build_joint_kge_lm(small_kge(), small_lm(), SharingPlanKind::KgeLmFullySharedLstm,
                                        w.vocab, table, 42);
  CHECK(joint.kge.cfg.encoder == KgeEncoderMode::UniLstm);
  CHECK(joint.kge.fwd.w_x.shares_storage(joint.lm.cell.w_x));
  CHECK(!joint.graph.contains("kge.encoder.bwd.w_x"));
  // the shared cell drives both scoring paths
  CHECK(joint.kge.score(w.triples[0]) > 0.0);
}

TEST_CASE("dimension mismatch across an alias is a config error") {
  ToyWorld w = ToyWorld::make();
  EmbeddingTable<float> table = random_embeddings<float>(w.vocab, 6, 5);
  LmConfig lm = small_lm();
  lm.hidden = 7;  // disagrees with the KGE forward cell
  CHECK_THROWS_AS(build_joint_kge_lm(small_kge(), lm, SharingPlanKind::KgeLmSharedForwardCell, w.vocab, table, 1),
                  ConfigError);

  CHECK_THROWS_AS(build_joint_kge_lm(small_kge(), small_lm(), SharingPlanKind::KgeEtSharedEmbeddings,
                                     w.vocab, table, 1),
                  ConfigError);  // an ET plan cannot wire a KGE+LM pair
}

TEST_CASE("shared embeddings: an ET update moves KGE scores") {
  ToyWorld w = ToyWorld::make();
  EmbeddingTable<float> table = random_embeddings<float>(w.vocab, 6, 5);
  JointKgeEt joint = build_joint_kge_et(small_kge(), small_typer(), SharingPlanKind::KgeEtSharedEmbeddings,
                                        w.vocab, w.types, table, 42);
  CHECK(joint.kge.embedding.shares_storage(joint.typer.embedding));
  CHECK(!joint.kge.fwd.w_x.shares_storage(joint.typer.left_enc.fwd.w_x));

  const Triple probe = w.triples[0];
  const double before = joint.kge.score(probe);

  TyperTrainOptions options;
  options.optimizer.kind = OptKind::Sgd;
  options.optimizer.learning_rate = 0.5f;
  options.batch_size = 4;
  TyperTrainer trainer(joint.typer, w.mentions, options, Rng::derived(42, "train-et"));
  trainer.run_epoch();

  const double after = joint.kge.score(probe);
  CHECK(before != after);  // the shared table moved under the KGE model
}

TEST_CASE("empty plan: alternating training reproduces independent training bit-exactly") {
  ToyWorld w = ToyWorld::make();
  const std::uint64_t seed = 77;
  EmbeddingTable<float> table = random_embeddings<float>(w.vocab, 6, seed);

  KgeTrainOptions kge_options;
  kge_options.optimizer.learning_rate = 0.01f;
  kge_options.batch_size = 4;
  LmTrainOptions lm_options;
  lm_options.optimizer.learning_rate = 0.01f;
  lm_options.batch_size = 4;
  const int cycles = 3;

  // joint run, nothing shared
  JointKgeLm joint = build_joint_kge_lm(small_kge(), small_lm(), SharingPlanKind::None, w.vocab, table, seed);
  KgeTrainer joint_kge(joint.kge, w.triples, kge_options, Rng::derived(seed, "train-kge"));
  LmTrainer joint_lm(joint.lm, wrapped(w), lm_options, Rng::derived(seed, "train-lm"));
  std::vector<TaskRunner> runners;
  runners.push_back({"kge", [&]() { return joint_kge.run_epoch(); }, [&](int n) { return joint_kge.run_steps(n); }});
  runners.push_back({"lm", [&]() { return joint_lm.run_epoch(); }, [&](int n) { return joint_lm.run_steps(n); }});
  AlternationSchedule schedule;
  schedule.order = {"kge", "lm"};
  schedule.cycles = cycles;
  train_alternating(runners, schedule);

  // independent runs with the same seeds and per-task epoch counts
  ModelGraph<float> solo_graph;
  ParamResolver<float> resolver(solo_graph);
  Rng kge_init = Rng::derived(seed, "init-kge");
  KgeModel<float> solo_kge = KgeModel<float>::build(resolver, "kge", small_kge(), w.vocab, table, kge_init);
  KgeTrainer solo_kge_trainer(solo_kge, w.triples, kge_options, Rng::derived(seed, "train-kge"));
  for (int e = 0; e < cycles; ++e) solo_kge_trainer.run_epoch();

  ModelGraph<float> lm_graph;
  ParamResolver<float> lm_resolver(lm_graph);
  Rng lm_init = Rng::derived(seed, "init-lm");
  LmModel<float> solo_lm = LmModel<float>::build(lm_resolver, "lm", small_lm(), w.vocab, table, lm_init);
  LmTrainer solo_lm_trainer(solo_lm, wrapped(w), lm_options, Rng::derived(seed, "train-lm"));
  for (int e = 0; e < cycles; ++e) solo_lm_trainer.run_epoch();

  for (const auto& [name, entry] : joint.graph.entries()) {
    const bool is_kge = name.rfind("kge.", 0) == 0;
    const ModelGraph<float>& ref = is_kge ? solo_graph : lm_graph;
    REQUIRE(ref.contains(name));
    CHECK(snapshot(entry.tensor) == snapshot(ref.get(name)));
  }
}

TEST_CASE("single-task schedule equals the standalone trainer") {
  ToyWorld w = ToyWorld::make();
  const std::uint64_t seed = 99;
  EmbeddingTable<float> table = random_embeddings<float>(w.vocab, 6, seed);
  KgeTrainOptions options;
  options.batch_size = 4;

  JointKgeLm joint = build_joint_kge_lm(small_kge(), small_lm(), SharingPlanKind::None, w.vocab, table, seed);
  KgeTrainer trainer(joint.kge, w.triples, options, Rng::derived(seed, "train-kge"));
  std::vector<TaskRunner> runners;
  runners.push_back({"kge", [&]() { return trainer.run_epoch(); }, [&](int n) { return trainer.run_steps(n); }});
  AlternationSchedule schedule;
  schedule.order = {"kge"};
  schedule.cycles = 2;
  const std::vector<IntervalLog> log = train_alternating(runners, schedule);
  CHECK(log.size() == 2);
  CHECK(log[0].task == "kge");

  ModelGraph<float> solo_graph;
  ParamResolver<float> resolver(solo_graph);
  Rng init = Rng::derived(seed, "init-kge");
  KgeModel<float> solo = KgeModel<float>::build(resolver, "kge", small_kge(), w.vocab, table, init);
  KgeTrainer solo_trainer(solo, w.triples, options, Rng::derived(seed, "train-kge"));
  solo_trainer.run_epoch();
  solo_trainer.run_epoch();
  CHECK(snapshot(joint.kge.fwd.w_x) == snapshot(solo.fwd.w_x));
  CHECK(snapshot(joint.kge.embedding) == snapshot(solo.embedding));
}

TEST_CASE("gradient isolation between intervals") {
  ToyWorld w = ToyWorld::make();
  const std::uint64_t seed = 123;
  EmbeddingTable<float> table = random_embeddings<float>(w.vocab, 6, seed);
  JointKgeLm joint = build_joint_kge_lm(small_kge(), small_lm(), SharingPlanKind::KgeLmSharedForwardCell,
                                        w.vocab, table, seed);
  KgeTrainOptions kge_options;
  kge_options.batch_size = 4;
  LmTrainOptions lm_options;
  lm_options.batch_size = 4;
  KgeTrainer kge_trainer(joint.kge, w.triples, kge_options, Rng::derived(seed, "train-kge"));
  LmTrainer lm_trainer(joint.lm, wrapped(w), lm_options, Rng::derived(seed, "train-lm"));

  // KGE interval: LM-private parameters (the output projection) do not move
  const auto lm_out_before = snapshot(joint.lm.w_out);
  const auto lm_bias_before = snapshot(joint.lm.b_out);
  kge_trainer.run_epoch();
  CHECK(snapshot(joint.lm.w_out) == lm_out_before);
  CHECK(snapshot(joint.lm.b_out) == lm_bias_before);
  CHECK(aliases_bit_identical(joint.graph, joint.aliases));

  // LM interval: the KGE backward cell never changes under this plan, while
  // the shared forward cell does
  const auto bwd_before = snapshot(joint.kge.bwd.w_x);
  const auto fwd_before = snapshot(joint.kge.fwd.w_x);
  const auto head_before = snapshot(joint.kge.head.weights[0]);
  lm_trainer.run_epoch();
  CHECK(snapshot(joint.kge.bwd.w_x) == bwd_before);
  CHECK(snapshot(joint.kge.head.weights[0]) == head_before);
  CHECK(snapshot(joint.kge.fwd.w_x) != fwd_before);
  CHECK(aliases_bit_identical(joint.graph, joint.aliases));
}

TEST_CASE("alias bit-identity holds under random interleavings") {
  ToyWorld w = ToyWorld::make();
  Rng meta(2026);
  for (int trial = 0; trial < 3; ++trial) {
    const std::uint64_t seed = 500 + trial;
    EmbeddingTable<float> table = random_embeddings<float>(w.vocab, 6, seed);
    const SharingPlanKind plan = trial % 2 == 0 ? SharingPlanKind::KgeLmSharedForwardCell
                                                : SharingPlanKind::KgeLmFullySharedLstm;
    JointKgeLm joint = build_joint_kge_lm(small_kge(), small_lm(), plan, w.vocab, table, seed);
    KgeTrainOptions kge_options;
    kge_options.batch_size = 2;
    LmTrainOptions lm_options;
    lm_options.batch_size = 2;
    KgeTrainer kge_trainer(joint.kge, w.triples, kge_options, Rng::derived(seed, "train-kge"));
    LmTrainer lm_trainer(joint.lm, wrapped(w), lm_options, Rng::derived(seed, "train-lm"));

    std::vector<TaskRunner> runners;
    runners.push_back({"kge", [&]() { return kge_trainer.run_epoch(); }, [&](int n) { return kge_trainer.run_steps(n); }});
    runners.push_back({"lm", [&]() { return lm_trainer.run_epoch(); }, [&](int n) { return lm_trainer.run_steps(n); }});

    AlternationSchedule schedule;
    schedule.unit = AlternationSchedule::Unit::Steps;
    schedule.steps_per_interval = 1 + static_cast<int>(meta.next_below(3));
    schedule.order = meta.next_bool() ? std::vector<std::string>{"kge", "lm"} : std::vector<std::string>{"lm", "kge"};
    schedule.cycles = 4;
    int checks = 0;
    train_alternating(runners, schedule, [&](const IntervalLog&) {
      CHECK(aliases_bit_identical(joint.graph, joint.aliases));
      ++checks;
    });
    CHECK(checks == 8);
  }
}

TEST_CASE("schedule validation") {
  std::vector<TaskRunner> runners;
  runners.push_back({"kge", []() { return 0.0; }, [](int) { return 0.0; }});
  AlternationSchedule schedule;
  schedule.order = {"kge", "lm"};
  CHECK_THROWS_AS(train_alternating(runners, schedule), ConfigError);  // lm has no runner
  schedule.order = {};
  CHECK_THROWS_AS(train_alternating(runners, schedule), ConfigError);
  schedule.order = {"kge"};
  schedule.cycles = 0;
  CHECK_THROWS_AS(train_alternating(runners, schedule), ConfigError);
  schedule.cycles = 1;
  schedule.unit = AlternationSchedule::Unit::Steps;
  schedule.steps_per_interval = 0;
  CHECK_THROWS_AS(train_alternating(runners, schedule), ConfigError);
}

TEST_CASE("evaluate_joint merges stored baselines when present") {
  ToyWorld w = ToyWorld::make();
  EmbeddingTable<float> table = random_embeddings<float>(w.vocab, 6, 7);
  JointKgeLm joint = build_joint_kge_lm(small_kge(), small_lm(), SharingPlanKind::KgeLmSharedForwardCell,
                                        w.vocab, table, 7);
  std::vector<Triple> labeled = w.triples;
  {
    std::set<std::string> keys;
    std::vector<std::string> pool;
    for (const Triple& t : w.triples) keys.insert(triple_key(t));
    for (const Triple& t : w.triples) {
      pool.push_back(t.head);
      pool.push_back(t.tail);
    }
    Rng rng(11);
    const std::vector<Triple> negs = corrupt_negatives(w.triples, pool, 1, keys, rng);
    labeled.insert(labeled.end(), negs.begin(), negs.end());
  }
  const ThresholdTable thresholds = fit_thresholds(joint.kge, labeled);

  EvalReport lm_baseline;
  lm_baseline.metrics["perplexity"] = 123.0;
  auto [kge_report, lm_report] = evaluate_joint_kge_lm(joint.kge, thresholds, labeled, joint.lm, wrapped(w),
                                                       std::nullopt, lm_baseline);
  CHECK(lm_report.metrics.count("baseline_perplexity") == 1);
  CHECK(lm_report.metrics.at("baseline_perplexity") == 123.0);
  CHECK(kge_report.metrics.count("baseline_accuracy") == 0);  // missing baseline stays absent
  CHECK(lm_report.metrics.at("perplexity") >= 1.0);
  CHECK(kge_report.metrics.count("accuracy") == 1);
}

TEST_CASE("the stronger KGE-ET plan shares the context encoders too") {
  ToyWorld w = ToyWorld::make();
  EmbeddingTable<float> table = random_embeddings<float>(w.vocab, 6, 5);
  JointKgeEt joint = build_joint_kge_et(small_kge(), small_typer(), SharingPlanKind::KgeEtSharedEncoder,
                                        w.vocab, w.types, table, 42);
  CHECK(joint.kge.embedding.shares_storage(joint.typer.embedding));
  CHECK(joint.typer.left_enc.fwd.w_x.shares_storage(joint.kge.fwd.w_x));
  CHECK(joint.typer.right_enc.fwd.w_x.shares_storage(joint.kge.fwd.w_x));
  CHECK(joint.typer.left_enc.bwd.w_h.shares_storage(joint.kge.bwd.w_h));
  CHECK(aliases_bit_identical(joint.graph, joint.aliases));

  // hidden-size disagreement across the alias is rejected
  TyperConfig bad = small_typer();
  bad.hidden = 7;
  CHECK_THROWS_AS(build_joint_kge_et(small_kge(), bad, SharingPlanKind::KgeEtSharedEncoder, w.vocab, w.types,
                                     table, 42),
                  ConfigError);
}
