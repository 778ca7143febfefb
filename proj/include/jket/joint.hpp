#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jket/kge.hpp"
#include "jket/lm.hpp"
#include "jket/typer.hpp"

namespace jket {

// Parameter-sharing plans. Aliased names resolve to one storage location, so
// an update through either task is observed identically by the other.
//
//   KgeEtSharedEmbeddings  - one word-embedding table feeds both tasks.
//   KgeEtSharedEncoder     - embeddings plus the KGE bi-LSTM reused as both
//                            context encoders (the stronger, non-default plan).
//   KgeLmSharedForwardCell - embeddings shared, and the LM LSTM is the
//                            forward cell of the KGE bi-LSTM.
//   KgeLmFullySharedLstm   - embeddings shared, and the KGE encoder is the
//                            LM's unidirectional LSTM itself.
enum class SharingPlanKind {
  None,
  KgeEtSharedEmbeddings,
  KgeEtSharedEncoder,
  KgeLmSharedForwardCell,
  KgeLmFullySharedLstm,
};

SharingPlanKind sharing_plan_from_string(const std::string& s);
std::string sharing_plan_to_string(SharingPlanKind kind);

// (requested name, canonical name) pairs the plan installs on the resolver.
std::vector<std::pair<std::string, std::string>> sharing_plan_aliases(SharingPlanKind kind);

template <typename S>
bool aliases_bit_identical(const ModelGraph<S>& graph,
                           const std::vector<std::pair<std::string, std::string>>& aliases);

struct JointKgeLm {
  ModelGraph<float> graph;
  KgeModel<float> kge;
  LmModel<float> lm;
  SharingPlanKind plan = SharingPlanKind::None;
  std::vector<std::pair<std::string, std::string>> aliases;
};

// LM builds first (it owns the canonical shared names), then the KGE model
// resolves through the plan. Both KGE+LM plans place the tasks in one
// embedding space; FullyShared additionally forces the unidirectional KGE
// encoder. Init draws come from per-task streams derived from `seed`, so an
// empty plan reproduces standalone initialization bit-exactly.
JointKgeLm build_joint_kge_lm(const KgeConfig& kge_cfg, const LmConfig& lm_cfg, SharingPlanKind plan,
                              const Vocabulary& vocab, const EmbeddingTable<float>& table,
                              std::uint64_t seed);

struct JointKgeEt {
  ModelGraph<float> graph;
  KgeModel<float> kge;
  TyperModel<float> typer;
  SharingPlanKind plan = SharingPlanKind::None;
  std::vector<std::pair<std::string, std::string>> aliases;
};

JointKgeEt build_joint_kge_et(const KgeConfig& kge_cfg, const TyperConfig& typer_cfg, SharingPlanKind plan,
                              const Vocabulary& vocab, const TypeInventory& types,
                              const EmbeddingTable<float>& table, std::uint64_t seed);

struct AlternationSchedule {
  enum class Unit { Epoch, Steps };
  Unit unit = Unit::Epoch;
  int steps_per_interval = 0;         // used when unit == Steps
  std::vector<std::string> order;     // task names, strictly alternated
  int cycles = 1;                     // full passes through the order
};

AlternationSchedule::Unit alternation_unit_from_string(const std::string& s);

// One task's training loop, bound by the runner that owns the trainer.
struct TaskRunner {
  std::string name;
  std::function<double()> run_epoch;
  std::function<double(int)> run_steps;
};

struct IntervalLog {
  int interval = 0;
  std::string task;
  double mean_loss = 0;
};

using IntervalHook = std::function<void(const IntervalLog&)>;

// Alternating optimization: exactly one task's loss is optimized within each
// interval, cycling through the schedule order. The hook runs after every
// interval (alias checks, per-interval evaluation, logging).
std::vector<IntervalLog> train_alternating(std::vector<TaskRunner>& tasks, const AlternationSchedule& schedule,
                                           const IntervalHook& hook = {});

// Side-by-side evaluation of the two joint tasks; stored baseline metrics,
// when given, are merged in under baseline_* keys.
std::pair<EvalReport, EvalReport> evaluate_joint_kge_lm(const KgeModel<float>& kge,
                                                        const ThresholdTable& thresholds,
                                                        const std::vector<Triple>& kge_test,
                                                        const LmModel<float>& lm,
                                                        const std::vector<SentenceExample>& lm_test,
                                                        const std::optional<EvalReport>& kge_baseline,
                                                        const std::optional<EvalReport>& lm_baseline);

std::pair<EvalReport, EvalReport> evaluate_joint_kge_et(const KgeModel<float>& kge,
                                                        const ThresholdTable& thresholds,
                                                        const std::vector<Triple>& kge_test,
                                                        const TyperModel<float>& typer,
                                                        const std::vector<TypingInstance>& et_test,
                                                        const std::optional<EvalReport>& kge_baseline,
                                                        const std::optional<EvalReport>& et_baseline);

}  // namespace jket
