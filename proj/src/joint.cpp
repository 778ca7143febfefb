#include "jket/joint.hpp"

#include <cstring>

namespace jket {

SharingPlanKind sharing_plan_from_string(const std::string& s) {
  if (s == "none") return SharingPlanKind::None;
  if (s == "kge-et-shared-embeddings") return SharingPlanKind::KgeEtSharedEmbeddings;
  if (s == "kge-et-shared-encoder") return SharingPlanKind::KgeEtSharedEncoder;
  if (s == "kge-lm-shared-forward-cell") return SharingPlanKind::KgeLmSharedForwardCell;
  if (s == "kge-lm-fully-shared-lstm") return SharingPlanKind::KgeLmFullySharedLstm;
  throw ConfigError("sharing-plan", "unknown plan: " + s);
}

std::string sharing_plan_to_string(SharingPlanKind kind) {
  switch (kind) {
    case SharingPlanKind::None: return "none";
    case SharingPlanKind::KgeEtSharedEmbeddings: return "kge-et-shared-embeddings";
    case SharingPlanKind::KgeEtSharedEncoder: return "kge-et-shared-encoder";
    case SharingPlanKind::KgeLmSharedForwardCell: return "kge-lm-shared-forward-cell";
    case SharingPlanKind::KgeLmFullySharedLstm: return "kge-lm-fully-shared-lstm";
  }
  throw ConfigError("sharing-plan", "unhandled plan kind");
}

namespace {

void alias_cell(std::vector<std::pair<std::string, std::string>>& out, const std::string& from,
                const std::string& to) {
  for (const char* part : {".w_x", ".w_h", ".b"}) {
    out.emplace_back(from + part, to + part);
  }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> sharing_plan_aliases(SharingPlanKind kind) {
  std::vector<std::pair<std::string, std::string>> out;
  switch (kind) {
    case SharingPlanKind::None:
      break;
    case SharingPlanKind::KgeEtSharedEmbeddings:
      out.emplace_back("et.embedding", "kge.embedding");
      break;
    case SharingPlanKind::KgeEtSharedEncoder:
      out.emplace_back("et.embedding", "kge.embedding");
      alias_cell(out, "et.left.fwd", "kge.encoder.fwd");
      alias_cell(out, "et.left.bwd", "kge.encoder.bwd");
      alias_cell(out, "et.right.fwd", "kge.encoder.fwd");
      alias_cell(out, "et.right.bwd", "kge.encoder.bwd");
      break;
    case SharingPlanKind::KgeLmSharedForwardCell:
      out.emplace_back("kge.embedding", "lm.embedding");
      alias_cell(out, "kge.encoder.fwd", "lm.cell");
      break;
    case SharingPlanKind::KgeLmFullySharedLstm:
      out.emplace_back("kge.embedding", "lm.embedding");
      alias_cell(out, "kge.encoder.fwd", "lm.cell");
      break;
  }
  return out;
}

template <typename S>
bool aliases_bit_identical(const ModelGraph<S>& graph,
                           const std::vector<std::pair<std::string, std::string>>& aliases) {
  for (const auto& [a, b] : aliases) {
    const Tensor<S> ta = graph.get(a);
    const Tensor<S> tb = graph.get(b);
    if (ta.shape() != tb.shape()) return false;
    if (std::memcmp(ta.values().data(), tb.values().data(), ta.size() * sizeof(S)) != 0) return false;
  }
  return true;
}

JointKgeLm build_joint_kge_lm(const KgeConfig& kge_cfg, const LmConfig& lm_cfg, SharingPlanKind plan,
                              const Vocabulary& vocab, const EmbeddingTable<float>& table,
                              std::uint64_t seed) {
  if (plan != SharingPlanKind::None && plan != SharingPlanKind::KgeLmSharedForwardCell &&
      plan != SharingPlanKind::KgeLmFullySharedLstm) {
    throw ConfigError("joint-kge-lm", "plan " + sharing_plan_to_string(plan) + " does not pair KGE with LM");
  }
  KgeConfig kge_final = kge_cfg;
  if (plan == SharingPlanKind::KgeLmFullySharedLstm) {
    kge_final.encoder = KgeEncoderMode::UniLstm;
  }
  if (plan == SharingPlanKind::KgeLmSharedForwardCell && kge_final.encoder != KgeEncoderMode::BiLstm) {
    throw ConfigError("joint-kge-lm", "shared-forward-cell plan needs the bi-LSTM KGE encoder");
  }

  JointKgeLm joint;
  joint.plan = plan;
  joint.aliases = sharing_plan_aliases(plan);
  ParamResolver<float> resolver(joint.graph);
  for (const auto& [from, to] : joint.aliases) resolver.add_alias(from, to);

  Rng lm_init = Rng::derived(seed, "init-lm");
  joint.lm = LmModel<float>::build(resolver, "lm", lm_cfg, vocab, table, lm_init);
  Rng kge_init = Rng::derived(seed, "init-kge");
  joint.kge = KgeModel<float>::build(resolver, "kge", kge_final, vocab, table, kge_init);
  return joint;
}

JointKgeEt build_joint_kge_et(const KgeConfig& kge_cfg, const TyperConfig& typer_cfg, SharingPlanKind plan,
                              const Vocabulary& vocab, const TypeInventory& types,
                              const EmbeddingTable<float>& table, std::uint64_t seed) {
  if (plan != SharingPlanKind::None && plan != SharingPlanKind::KgeEtSharedEmbeddings &&
      plan != SharingPlanKind::KgeEtSharedEncoder) {
    throw ConfigError("joint-kge-et", "plan " + sharing_plan_to_string(plan) + " does not pair KGE with ET");
  }
  JointKgeEt joint;
  joint.plan = plan;
  joint.aliases = sharing_plan_aliases(plan);
  ParamResolver<float> resolver(joint.graph);
  for (const auto& [from, to] : joint.aliases) resolver.add_alias(from, to);

  Rng kge_init = Rng::derived(seed, "init-kge");
  joint.kge = KgeModel<float>::build(resolver, "kge", kge_cfg, vocab, table, kge_init);
  Rng et_init = Rng::derived(seed, "init-et");
  joint.typer = TyperModel<float>::build(resolver, "et", typer_cfg, vocab, types, table, et_init);
  return joint;
}

AlternationSchedule::Unit alternation_unit_from_string(const std::string& s) {
  if (s == "epoch") return AlternationSchedule::Unit::Epoch;
  if (s == "steps") return AlternationSchedule::Unit::Steps;
  throw ConfigError("alternation", "unknown unit: " + s);
}

std::vector<IntervalLog> train_alternating(std::vector<TaskRunner>& tasks, const AlternationSchedule& schedule,
                                           const IntervalHook& hook) {
  if (schedule.order.empty()) throw ConfigError("alternation", "empty task order");
  if (schedule.cycles < 1) throw ConfigError("alternation", "cycles must be >= 1");
  if (schedule.unit == AlternationSchedule::Unit::Steps && schedule.steps_per_interval < 1) {
    throw ConfigError("alternation", "steps-per-interval must be >= 1");
  }
  std::vector<TaskRunner*> sequence;
  for (const std::string& name : schedule.order) {
    TaskRunner* found = nullptr;
    for (TaskRunner& t : tasks) {
      if (t.name == name) found = &t;
    }
    if (!found) throw ConfigError("alternation", "scheduled task has no runner: " + name);
    sequence.push_back(found);
  }

  std::vector<IntervalLog> log;
  int interval = 0;
  for (int cycle = 0; cycle < schedule.cycles; ++cycle) {
    for (TaskRunner* task : sequence) {
      IntervalLog entry;
      entry.interval = interval++;
      entry.task = task->name;
      entry.mean_loss = schedule.unit == AlternationSchedule::Unit::Epoch
                            ? task->run_epoch()
                            : task->run_steps(schedule.steps_per_interval);
      log.push_back(entry);
      if (hook) hook(log.back());
    }
  }
  return log;
}

namespace {

void merge_baseline(EvalReport& report, const std::optional<EvalReport>& baseline) {
  if (!baseline) return;  // missing baseline: comparison keys stay absent
  for (const auto& [name, value] : baseline->metrics) {
    report.metrics["baseline_" + name] = value;
  }
}

}  // namespace

std::pair<EvalReport, EvalReport> evaluate_joint_kge_lm(const KgeModel<float>& kge,
                                                        const ThresholdTable& thresholds,
                                                        const std::vector<Triple>& kge_test,
                                                        const LmModel<float>& lm,
                                                        const std::vector<SentenceExample>& lm_test,
                                                        const std::optional<EvalReport>& kge_baseline,
                                                        const std::optional<EvalReport>& lm_baseline) {
  EvalReport kge_report = evaluate_kge(kge, thresholds, kge_test);
  kge_report.task = "joint-kge-lm/kge";
  merge_baseline(kge_report, kge_baseline);

  EvalReport lm_report;
  lm_report.task = "joint-kge-lm/lm";
  lm_report.metrics["perplexity"] = perplexity(lm, lm_test);
  merge_baseline(lm_report, lm_baseline);
  return {kge_report, lm_report};
}

std::pair<EvalReport, EvalReport> evaluate_joint_kge_et(const KgeModel<float>& kge,
                                                        const ThresholdTable& thresholds,
                                                        const std::vector<Triple>& kge_test,
                                                        const TyperModel<float>& typer,
                                                        const std::vector<TypingInstance>& et_test,
                                                        const std::optional<EvalReport>& kge_baseline,
                                                        const std::optional<EvalReport>& et_baseline) {
  EvalReport kge_report = evaluate_kge(kge, thresholds, kge_test);
  kge_report.task = "joint-kge-et/kge";
  merge_baseline(kge_report, kge_baseline);

  EvalReport et_report = evaluate_typing(typer, et_test);
  et_report.task = "joint-kge-et/et";
  merge_baseline(et_report, et_baseline);
  return {kge_report, et_report};
}

template bool aliases_bit_identical(const ModelGraph<float>&,
                                    const std::vector<std::pair<std::string, std::string>>&);
template bool aliases_bit_identical(const ModelGraph<double>&,
                                    const std::vector<std::pair<std::string, std::string>>&);

}  // namespace jket
