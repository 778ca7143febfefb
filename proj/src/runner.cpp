#include "jket/runner.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "jket/gradcheck.hpp"

namespace jket {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Per-task optimizer kind and learning rate default to the shared ones; the
// joint runs lean on this to balance how hard each task pulls on shared
// parameters.
OptimizerConfig<float> optimizer_config(const RunConfig& cfg, double task_lr = 0,
                                        const std::string& task_opt = "") {
  OptimizerConfig<float> opt;
  opt.kind = opt_kind_from_string(task_opt.empty() ? cfg.optimizer : task_opt);
  opt.learning_rate = static_cast<float>(task_lr > 0 ? task_lr : cfg.learning_rate);
  opt.weight_decay = static_cast<float>(cfg.weight_decay);
  return opt;
}

KgeConfig kge_config(const RunConfig& cfg) {
  KgeConfig k;
  k.embed_dim = cfg.embed_dim;
  k.hidden = cfg.hidden;
  k.head_hidden = cfg.kge_head;
  k.encoder = kge_encoder_from_string(cfg.kge_encoder);
  k.cell = cell_kind_from_string(cfg.cell);
  k.final_state = final_state_from_string(cfg.final_state);
  k.positive_weight = cfg.positive_weight;
  return k;
}

TyperConfig typer_config(const RunConfig& cfg) {
  TyperConfig t;
  t.embed_dim = cfg.embed_dim;
  t.hidden = cfg.hidden;
  t.attention = cfg.attention;
  t.head_hidden = cfg.typer_head;
  t.tau = cfg.tau;
  t.sigmoid_before_threshold = cfg.typer_sigmoid_threshold;
  t.context_cap = cfg.context_cap;
  t.cell = cell_kind_from_string(cfg.cell);
  return t;
}

LmConfig lm_config(const RunConfig& cfg) {
  LmConfig l;
  l.embed_dim = cfg.embed_dim;
  l.hidden = cfg.hidden;
  l.tie_output = cfg.tie_lm_output;
  l.cell = cell_kind_from_string(cfg.cell);
  return l;
}

EmbeddingTable<float> make_embeddings(const RunConfig& cfg, const Vocabulary& vocab) {
  if (cfg.embeddings_path.empty()) {
    return random_embeddings<float>(vocab, cfg.embed_dim, cfg.seed);
  }
  EmbeddingTable<float> table = load_pretrained<float>(cfg.embeddings_path, vocab, cfg.seed);
  if (table.dim != cfg.embed_dim) {
    throw ConfigError("embeddings", "pretrained dimension " + std::to_string(table.dim) +
                                        " does not match configured dim " + std::to_string(cfg.embed_dim));
  }
  table.trainable = cfg.embeddings_trainable;
  return table;
}

void count_triple_tokens(VocabCounter& counter, const std::vector<Triple>& triples) {
  for (const Triple& t : triples) {
    const TripleTokens toks = tokenize_triple(t.head, t.relation, t.tail);
    counter.add_all(toks.flattened());
  }
}

std::vector<Triple> positives_of(const std::vector<Triple>& triples) {
  std::set<std::string> seen;
  std::vector<Triple> out;
  for (const Triple& t : triples) {
    if (t.label != 1) continue;
    if (seen.insert(triple_key(t)).second) out.push_back(t);
  }
  return out;
}

// Balanced labeled evaluation set: the split's positives plus one seeded
// corruption per positive, drawn against the full positive closure.
std::vector<Triple> labeled_eval_set(const std::vector<Triple>& positives,
                                     const std::set<std::string>& closure,
                                     const std::vector<std::string>& pool, std::uint64_t seed,
                                     const std::string& label) {
  std::vector<Triple> out = positives;
  Rng rng = Rng::derived(seed, "eval-negatives-" + label);
  std::vector<Triple> negatives = corrupt_negatives(positives, pool, 1, closure, rng);
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

std::string thresholds_to_extras(const ThresholdTable& thresholds, const TypeInventory* types,
                                 const EmbeddingTable<float>* table) {
  json j;
  j["thresholds"] = {{"global", thresholds.global_threshold}, {"per_relation", json::object()}};
  for (const auto& [rel, th] : thresholds.per_relation) j["thresholds"]["per_relation"][rel] = th;
  if (types) j["types"] = types->names();
  if (table) j["embedding_coverage"] = {{"matched", table->matched}, {"filled", table->filled}};
  return j.dump();
}

ThresholdTable thresholds_from_extras(const std::string& extras) {
  ThresholdTable table;
  if (extras.empty()) return table;
  json j = json::parse(extras, nullptr, false);
  if (j.is_discarded() || !j.contains("thresholds")) return table;
  table.global_threshold = j["thresholds"].value("global", 0.5);
  if (j["thresholds"].contains("per_relation")) {
    for (auto it = j["thresholds"]["per_relation"].begin(); it != j["thresholds"]["per_relation"].end(); ++it) {
      table.per_relation[it.key()] = it.value().get<double>();
    }
  }
  return table;
}

std::vector<std::string> types_from_extras(const std::string& extras) {
  json j = json::parse(extras, nullptr, false);
  if (j.is_discarded() || !j.contains("types")) return {};
  return j["types"].get<std::vector<std::string>>();
}

void finalize_report(EvalReport& report, const RunConfig& cfg, const std::string& dataset) {
  report.dataset = dataset;
  report.seed = cfg.seed;
  report.timestamp = iso8601_now();
  report.validate();
}

std::string save_run_archive(const RunConfig& cfg, const ModelGraph<float>& graph, const Vocabulary& vocab,
                             const std::string& extras) {
  fs::create_directories(cfg.out_dir);
  const std::string path = (fs::path(cfg.out_dir) / "model.jket").string();
  save_archive(ModelArchive::from_graph(graph, vocab, cfg.to_json(), extras), path);
  return path;
}

// ---- standalone tasks ------------------------------------------------------

TrainArtifacts train_kge_task(const RunConfig& cfg, bool lenient, bool quiet) {
  // When pointed at a joint corpus this trains on its train-split triples,
  // with the vocabulary built exactly as the joint task builds it, so
  // baseline and joint numbers are comparable (and empty-plan joint training
  // reproduces this run bit-for-bit).
  std::vector<Triple> train, dev, test;
  std::string dataset;
  std::unique_ptr<Vocabulary> vocab;
  if (cfg.has_data("joint")) {
    JointSplits splits = prepare_joint_corpus(cfg.data_path("joint"), cfg.split_train, cfg.split_dev, cfg.seed, lenient);
    train = splits.train_triples;
    dev = splits.dev_triples;
    test = splits.test_triples;
    dataset = cfg.data_path("joint");
    vocab = std::make_unique<Vocabulary>(splits.vocab_counter.build(cfg.vocab_max_size));
  } else {
    train = positives_of(read_triples(cfg.data_path("train"), lenient));
    if (cfg.has_data("dev")) dev = read_triples(cfg.data_path("dev"), lenient);
    if (cfg.has_data("test")) test = read_triples(cfg.data_path("test"), lenient);
    dataset = cfg.data_path("train");
    VocabCounter counter;
    count_triple_tokens(counter, train);
    if (counter.empty()) throw DataError("train-kge", "no training triples in " + dataset);
    vocab = std::make_unique<Vocabulary>(counter.build(cfg.vocab_max_size));
  }
  if (train.empty()) throw DataError("train-kge", "no positive training triples");

  EmbeddingTable<float> table = make_embeddings(cfg, *vocab);
  ModelGraph<float> graph;
  ParamResolver<float> resolver(graph);
  Rng init = Rng::derived(cfg.seed, "init-kge");
  KgeModel<float> model = KgeModel<float>::build(resolver, "kge", kge_config(cfg), *vocab, table, init);

  KgeTrainOptions options;
  options.optimizer = optimizer_config(cfg, cfg.kge_learning_rate, cfg.kge_optimizer);
  options.batch_size = cfg.batch_size;
  options.negative_ratio = cfg.negative_ratio;
  KgeTrainer trainer(model, train, options, Rng::derived(cfg.seed, "train-kge"));
  for (int e = 0; e < cfg.epochs; ++e) {
    const double loss = trainer.run_epoch();
    if (!quiet) std::cout << "[train-kge] epoch " << e << " loss " << loss << "\n";
  }

  // Threshold fitting needs labeled data with both classes; a positives-only
  // dev role gets balanced with seeded corruptions.
  std::vector<Triple> dev_labeled = dev;
  bool dev_has_negative = false;
  for (const Triple& t : dev_labeled) dev_has_negative = dev_has_negative || t.label == 0;
  if (dev_labeled.empty() || !dev_has_negative) {
    std::vector<Triple> base = dev_labeled.empty() ? train : positives_of(dev_labeled);
    dev_labeled = labeled_eval_set(base, trainer.positive_keys(), trainer.entity_pool(), cfg.seed, "dev");
  }
  const ThresholdTable thresholds = fit_thresholds(model, dev_labeled);

  TrainArtifacts artifacts;
  EvalReport report = evaluate_kge(model, thresholds, test.empty() ? dev_labeled : test);
  finalize_report(report, cfg, dataset);
  artifacts.reports.push_back(report);
  append_report(cfg.out_dir, report);

  artifacts.archive_path = save_run_archive(cfg, graph, *vocab, thresholds_to_extras(thresholds, nullptr, &table));
  return artifacts;
}

TrainArtifacts train_et_task(const RunConfig& cfg, bool lenient, bool quiet) {
  std::vector<TypingInstance> train = read_typing(cfg.data_path("train"), lenient);
  std::vector<TypingInstance> test;
  if (cfg.has_data("test")) test = read_typing(cfg.data_path("test"), lenient);
  if (train.empty()) throw DataError("train-et", "no training mentions");

  VocabCounter counter;
  for (const TypingInstance& inst : train) counter.add_all(inst.tokens);
  Vocabulary vocab = counter.build(cfg.vocab_max_size);
  TypeInventory types = TypeInventory::from_instances(train);
  EmbeddingTable<float> table = make_embeddings(cfg, vocab);

  ModelGraph<float> graph;
  ParamResolver<float> resolver(graph);
  Rng init = Rng::derived(cfg.seed, "init-et");
  TyperModel<float> model = TyperModel<float>::build(resolver, "et", typer_config(cfg), vocab, types, table, init);

  TyperTrainOptions options;
  options.optimizer = optimizer_config(cfg, cfg.et_learning_rate, cfg.et_optimizer);
  options.batch_size = cfg.batch_size;
  TyperTrainer trainer(model, train, options, Rng::derived(cfg.seed, "train-et"));
  for (int e = 0; e < cfg.epochs; ++e) {
    const double loss = trainer.run_epoch();
    if (!quiet) std::cout << "[train-et] epoch " << e << " loss " << loss << "\n";
  }

  TrainArtifacts artifacts;
  EvalReport report = evaluate_typing(model, test.empty() ? train : test);
  finalize_report(report, cfg, cfg.data_path("train"));
  artifacts.reports.push_back(report);
  append_report(cfg.out_dir, report);

  ThresholdTable no_thresholds;
  artifacts.archive_path = save_run_archive(cfg, graph, vocab, thresholds_to_extras(no_thresholds, &types, &table));
  return artifacts;
}

TrainArtifacts train_lm_task(const RunConfig& cfg, bool lenient, bool quiet) {
  std::vector<std::vector<std::string>> train_sentences, test_sentences;
  std::string dataset;
  std::unique_ptr<Vocabulary> vocab;
  if (cfg.has_data("joint")) {
    JointSplits splits = prepare_joint_corpus(cfg.data_path("joint"), cfg.split_train, cfg.split_dev, cfg.seed, lenient);
    train_sentences = std::move(splits.train_sentences);
    test_sentences = std::move(splits.test_sentences);
    dataset = cfg.data_path("joint");
    vocab = std::make_unique<Vocabulary>(splits.vocab_counter.build(cfg.vocab_max_size));
  } else {
    dataset = cfg.data_path("train");
    VocabCounter counter;
    for_each_sentence(dataset, [&](std::vector<std::string>&& tokens) { counter.add_all(tokens); });
    if (counter.empty()) throw DataError("train-lm", "empty corpus " + dataset);
    vocab = std::make_unique<Vocabulary>(counter.build(cfg.vocab_max_size));
    train_sentences = read_sentences(dataset);
    if (cfg.has_data("test")) test_sentences = read_sentences(cfg.data_path("test"));
  }

  EmbeddingTable<float> table = make_embeddings(cfg, *vocab);
  ModelGraph<float> graph;
  ParamResolver<float> resolver(graph);
  Rng init = Rng::derived(cfg.seed, "init-lm");
  LmModel<float> model = LmModel<float>::build(resolver, "lm", lm_config(cfg), *vocab, table, init);

  std::vector<SentenceExample> train;
  train.reserve(train_sentences.size());
  for (const auto& s : train_sentences) train.push_back(wrap_sentence(s, *vocab));

  LmTrainOptions options;
  options.optimizer = optimizer_config(cfg, cfg.lm_learning_rate, cfg.lm_optimizer);
  options.batch_size = cfg.batch_size;
  LmTrainer trainer(model, train, options, Rng::derived(cfg.seed, "train-lm"));
  for (int e = 0; e < cfg.epochs; ++e) {
    const double loss = trainer.run_epoch();
    if (!quiet) std::cout << "[train-lm] epoch " << e << " loss " << loss << "\n";
  }

  TrainArtifacts artifacts;
  EvalReport report;
  report.task = "lm";
  report.metrics["perplexity"] = [&] {
    std::vector<SentenceExample> eval_set;
    const auto& source = test_sentences.empty() ? train_sentences : test_sentences;
    for (const auto& s : source) eval_set.push_back(wrap_sentence(s, *vocab));
    return perplexity(model, eval_set);
  }();
  finalize_report(report, cfg, dataset);
  artifacts.reports.push_back(report);
  append_report(cfg.out_dir, report);

  artifacts.archive_path = save_run_archive(cfg, graph, *vocab, thresholds_to_extras(ThresholdTable{}, nullptr, &table));
  return artifacts;
}

// ---- joint tasks -----------------------------------------------------------

TrainArtifacts train_joint_kge_lm_task(const RunConfig& cfg, bool lenient, bool quiet) {
  JointSplits splits = prepare_joint_corpus(cfg.data_path("joint"), cfg.split_train, cfg.split_dev, cfg.seed, lenient);
  Vocabulary vocab = splits.vocab_counter.build(cfg.vocab_max_size);
  EmbeddingTable<float> table = make_embeddings(cfg, vocab);

  const SharingPlanKind plan = sharing_plan_from_string(cfg.plan);
  JointKgeLm joint = build_joint_kge_lm(kge_config(cfg), lm_config(cfg), plan, vocab, table, cfg.seed);

  KgeTrainOptions kge_options;
  kge_options.optimizer = optimizer_config(cfg, cfg.kge_learning_rate, cfg.kge_optimizer);
  kge_options.batch_size = cfg.batch_size;
  kge_options.negative_ratio = cfg.negative_ratio;
  KgeTrainer kge_trainer(joint.kge, splits.train_triples, kge_options, Rng::derived(cfg.seed, "train-kge"));

  std::vector<SentenceExample> lm_train;
  for (const auto& s : splits.train_sentences) lm_train.push_back(wrap_sentence(s, vocab));
  LmTrainOptions lm_options;
  lm_options.optimizer = optimizer_config(cfg, cfg.lm_learning_rate, cfg.lm_optimizer);
  lm_options.batch_size = cfg.batch_size;
  LmTrainer lm_trainer(joint.lm, lm_train, lm_options, Rng::derived(cfg.seed, "train-lm"));

  std::vector<TaskRunner> runners;
  runners.push_back({"kge", [&]() { return kge_trainer.run_epoch(); },
                     [&](int n) { return kge_trainer.run_steps(n); }});
  runners.push_back({"lm", [&]() { return lm_trainer.run_epoch(); },
                     [&](int n) { return lm_trainer.run_steps(n); }});

  AlternationSchedule schedule;
  schedule.unit = alternation_unit_from_string(cfg.unit);
  schedule.steps_per_interval = cfg.steps_per_interval;
  schedule.order = cfg.order;
  schedule.cycles = cfg.cycles;

  TrainArtifacts artifacts;
  artifacts.intervals = train_alternating(runners, schedule, [&](const IntervalLog& log) {
    if (!aliases_bit_identical(joint.graph, joint.aliases)) {
      throw UsageError("joint-trainer", "aliased tensors diverged after interval " + std::to_string(log.interval));
    }
    if (!quiet) std::cout << "[joint] interval " << log.interval << " task " << log.task << " loss " << log.mean_loss << "\n";
  });

  const ThresholdTable thresholds = fit_thresholds(joint.kge, splits.dev_triples);
  std::vector<SentenceExample> lm_test;
  for (const auto& s : splits.test_sentences) lm_test.push_back(wrap_sentence(s, vocab));
  auto [kge_report, lm_report] = evaluate_joint_kge_lm(joint.kge, thresholds, splits.test_triples, joint.lm,
                                                       lm_test, std::nullopt, std::nullopt);
  finalize_report(kge_report, cfg, cfg.data_path("joint"));
  finalize_report(lm_report, cfg, cfg.data_path("joint"));
  artifacts.reports = {kge_report, lm_report};
  append_report(cfg.out_dir, kge_report);
  append_report(cfg.out_dir, lm_report);

  artifacts.archive_path = save_run_archive(cfg, joint.graph, vocab, thresholds_to_extras(thresholds, nullptr, &table));
  return artifacts;
}

TrainArtifacts train_joint_kge_et_task(const RunConfig& cfg, bool lenient, bool quiet) {
  std::vector<Triple> kge_train = positives_of(read_triples(cfg.data_path("triples_train"), lenient));
  std::vector<TypingInstance> et_train = read_typing(cfg.data_path("typing_train"), lenient);
  if (kge_train.empty()) throw DataError("train-joint-kge-et", "no positive triples");
  if (et_train.empty()) throw DataError("train-joint-kge-et", "no typing mentions");

  VocabCounter counter;
  count_triple_tokens(counter, kge_train);
  for (const TypingInstance& inst : et_train) counter.add_all(inst.tokens);
  Vocabulary vocab = counter.build(cfg.vocab_max_size);
  TypeInventory types = TypeInventory::from_instances(et_train);
  EmbeddingTable<float> table = make_embeddings(cfg, vocab);

  const SharingPlanKind plan = sharing_plan_from_string(cfg.plan);
  JointKgeEt joint = build_joint_kge_et(kge_config(cfg), typer_config(cfg), plan, vocab, types, table, cfg.seed);

  KgeTrainOptions kge_options;
  kge_options.optimizer = optimizer_config(cfg, cfg.kge_learning_rate, cfg.kge_optimizer);
  kge_options.batch_size = cfg.batch_size;
  kge_options.negative_ratio = cfg.negative_ratio;
  KgeTrainer kge_trainer(joint.kge, kge_train, kge_options, Rng::derived(cfg.seed, "train-kge"));

  TyperTrainOptions et_options;
  et_options.optimizer = optimizer_config(cfg, cfg.et_learning_rate, cfg.et_optimizer);
  et_options.batch_size = cfg.batch_size;
  TyperTrainer et_trainer(joint.typer, et_train, et_options, Rng::derived(cfg.seed, "train-et"));

  std::vector<TaskRunner> runners;
  runners.push_back({"kge", [&]() { return kge_trainer.run_epoch(); },
                     [&](int n) { return kge_trainer.run_steps(n); }});
  runners.push_back({"et", [&]() { return et_trainer.run_epoch(); },
                     [&](int n) { return et_trainer.run_steps(n); }});

  AlternationSchedule schedule;
  schedule.unit = alternation_unit_from_string(cfg.unit);
  schedule.steps_per_interval = cfg.steps_per_interval;
  schedule.order = cfg.order;
  schedule.cycles = cfg.cycles;

  TrainArtifacts artifacts;
  artifacts.intervals = train_alternating(runners, schedule, [&](const IntervalLog& log) {
    if (!aliases_bit_identical(joint.graph, joint.aliases)) {
      throw UsageError("joint-trainer", "aliased tensors diverged after interval " + std::to_string(log.interval));
    }
    if (!quiet) std::cout << "[joint] interval " << log.interval << " task " << log.task << " loss " << log.mean_loss << "\n";
  });

  std::vector<Triple> kge_dev = cfg.has_data("triples_dev") ? read_triples(cfg.data_path("triples_dev"), lenient)
                                                            : labeled_eval_set(kge_train, kge_trainer.positive_keys(),
                                                                               kge_trainer.entity_pool(), cfg.seed, "dev");
  std::vector<Triple> kge_test = cfg.has_data("triples_test") ? read_triples(cfg.data_path("triples_test"), lenient) : kge_dev;
  std::vector<TypingInstance> et_test = cfg.has_data("typing_test") ? read_typing(cfg.data_path("typing_test"), lenient) : et_train;

  const ThresholdTable thresholds = fit_thresholds(joint.kge, kge_dev);
  auto [kge_report, et_report] = evaluate_joint_kge_et(joint.kge, thresholds, kge_test, joint.typer, et_test,
                                                       std::nullopt, std::nullopt);
  finalize_report(kge_report, cfg, cfg.data_path("triples_train"));
  finalize_report(et_report, cfg, cfg.data_path("typing_train"));
  artifacts.reports = {kge_report, et_report};
  append_report(cfg.out_dir, kge_report);
  append_report(cfg.out_dir, et_report);

  artifacts.archive_path = save_run_archive(cfg, joint.graph, vocab, thresholds_to_extras(thresholds, &types, &table));
  return artifacts;
}

}  // namespace

JointSplits prepare_joint_corpus(const std::string& path, double train_frac, double dev_frac,
                                 std::uint64_t seed, bool lenient) {
  const std::vector<JointRecord> records = read_joint(path, lenient);
  if (records.empty()) throw DataError("joint-corpus", "no records in " + path);
  const SplitIndices split = split_indices(records.size(), train_frac, dev_frac, seed);

  JointSplits out;
  auto collect = [&](const std::vector<std::size_t>& idx, std::vector<std::vector<std::string>>& sentences,
                     std::vector<Triple>* triples) {
    std::set<std::string> seen;
    for (std::size_t i : idx) {
      sentences.push_back(records[i].tokens);
      if (!triples) continue;
      for (const Triple& t : records[i].triples) {
        if (seen.insert(triple_key(t)).second) triples->push_back(t);
      }
    }
  };
  std::vector<Triple> dev_pos, test_pos;
  collect(split.train, out.train_sentences, &out.train_triples);
  collect(split.dev, out.dev_sentences, &dev_pos);
  collect(split.test, out.test_sentences, &test_pos);

  // Corruptions are rejected against the positive closure of the whole file,
  // so no evaluation negative is a true fact of another split.
  std::set<std::string> closure;
  std::set<std::string> entity_set;
  for (const JointRecord& rec : records) {
    for (const Triple& t : rec.triples) {
      closure.insert(triple_key(t));
      entity_set.insert(t.head);
      entity_set.insert(t.tail);
    }
  }
  const std::vector<std::string> pool(entity_set.begin(), entity_set.end());
  out.dev_triples = labeled_eval_set(dev_pos, closure, pool, seed, "dev");
  out.test_triples = labeled_eval_set(test_pos, closure, pool, seed, "test");

  // One vocabulary for everything trained on this corpus: train sentences
  // plus tokenized train triples (the [SEP] marker rides along).
  for (const auto& s : out.train_sentences) out.vocab_counter.add_all(s);
  count_triple_tokens(out.vocab_counter, out.train_triples);
  return out;
}

void append_report(const std::string& out_dir, const EvalReport& report) {
  fs::create_directories(out_dir);
  std::ofstream f(fs::path(out_dir) / "reports.jsonl", std::ios::app);
  if (!f) throw IoError("report", "cannot append to reports.jsonl in " + out_dir);
  f << report.to_json() << "\n";
}

TrainArtifacts run_train(const RunConfig& cfg, bool lenient, bool quiet) {
  cfg.validate(/*check_paths=*/true);
  if (cfg.task == "kge") return train_kge_task(cfg, lenient, quiet);
  if (cfg.task == "et") return train_et_task(cfg, lenient, quiet);
  if (cfg.task == "lm") return train_lm_task(cfg, lenient, quiet);
  if (cfg.task == "joint-kge-lm") return train_joint_kge_lm_task(cfg, lenient, quiet);
  if (cfg.task == "joint-kge-et") return train_joint_kge_et_task(cfg, lenient, quiet);
  throw ConfigError("run_train", "unknown task: " + cfg.task);
}

LoadedModel load_model(const std::string& path) {
  const ModelArchive archive = load_archive(path);
  LoadedModel loaded;
  loaded.config = RunConfig::from_json(archive.config_json, path + "#config");
  loaded.config.validate(/*check_paths=*/false);
  loaded.vocab = std::make_shared<Vocabulary>(Vocabulary::from_tokens(archive.vocab_tokens));
  loaded.thresholds = thresholds_from_extras(archive.extras_json);

  // Rebuild the graph with placeholder values, then overwrite from the
  // archive; the build path (and alias wiring) is the same one training used.
  const RunConfig& cfg = loaded.config;
  EmbeddingTable<float> table = random_embeddings<float>(*loaded.vocab, cfg.embed_dim, cfg.seed);
  if (cfg.task == "kge") {
    ParamResolver<float> resolver(loaded.graph);
    Rng init = Rng::derived(cfg.seed, "init-kge");
    loaded.kge = KgeModel<float>::build(resolver, "kge", kge_config(cfg), *loaded.vocab, table, init);
  } else if (cfg.task == "et") {
    ParamResolver<float> resolver(loaded.graph);
    TypeInventory types = TypeInventory::from_names(types_from_extras(archive.extras_json));
    Rng init = Rng::derived(cfg.seed, "init-et");
    loaded.typer = TyperModel<float>::build(resolver, "et", typer_config(cfg), *loaded.vocab, types, table, init);
  } else if (cfg.task == "lm") {
    ParamResolver<float> resolver(loaded.graph);
    Rng init = Rng::derived(cfg.seed, "init-lm");
    loaded.lm = LmModel<float>::build(resolver, "lm", lm_config(cfg), *loaded.vocab, table, init);
  } else if (cfg.task == "joint-kge-lm") {
    JointKgeLm joint = build_joint_kge_lm(kge_config(cfg), lm_config(cfg), sharing_plan_from_string(cfg.plan),
                                          *loaded.vocab, table, cfg.seed);
    loaded.graph = std::move(joint.graph);
    loaded.kge = std::move(joint.kge);
    loaded.lm = std::move(joint.lm);
  } else if (cfg.task == "joint-kge-et") {
    TypeInventory types = TypeInventory::from_names(types_from_extras(archive.extras_json));
    JointKgeEt joint = build_joint_kge_et(kge_config(cfg), typer_config(cfg), sharing_plan_from_string(cfg.plan),
                                          *loaded.vocab, types, table, cfg.seed);
    loaded.graph = std::move(joint.graph);
    loaded.kge = std::move(joint.kge);
    loaded.typer = std::move(joint.typer);
  } else {
    throw FormatError("load_model", "archive carries unknown task: " + cfg.task);
  }
  load_graph_values(loaded.graph, archive);
  return loaded;
}

EvalReport run_eval(LoadedModel& model, const std::string& task, const std::string& data_path, bool lenient) {
  EvalReport report;
  if (task == "kge") {
    if (!model.kge) throw ConfigError("eval", "archive has no KGE model");
    const std::vector<Triple> test = read_triples(data_path, lenient);
    report = evaluate_kge(*model.kge, model.thresholds, test);
  } else if (task == "et") {
    if (!model.typer) throw ConfigError("eval", "archive has no typer model");
    const std::vector<TypingInstance> test = read_typing(data_path, lenient);
    report = evaluate_typing(*model.typer, test);
  } else if (task == "lm") {
    if (!model.lm) throw ConfigError("eval", "archive has no language model");
    std::vector<SentenceExample> corpus;
    for_each_sentence(data_path, [&](std::vector<std::string>&& tokens) {
      corpus.push_back(wrap_sentence(tokens, *model.vocab));
    });
    if (corpus.empty()) throw DataError("eval", "empty corpus " + data_path);
    report.task = "lm";
    report.metrics["perplexity"] = perplexity(*model.lm, corpus);
  } else {
    throw ConfigError("eval", "unknown eval task: " + task);
  }
  report.dataset = data_path;
  report.seed = model.config.seed;
  report.timestamp = iso8601_now();
  report.validate();
  return report;
}

}  // namespace jket
