#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jket/archive.hpp"
#include "jket/config.hpp"
#include "jket/dataset.hpp"
#include "jket/joint.hpp"

namespace jket {

// Everything a finished training run leaves behind.
struct TrainArtifacts {
  std::string archive_path;
  std::vector<EvalReport> reports;
  std::vector<IntervalLog> intervals;  // joint tasks only
};

// Dispatches on cfg.task. Writes the model archive and appends every report
// to <out_dir>/reports.jsonl.
TrainArtifacts run_train(const RunConfig& cfg, bool lenient = false, bool quiet = false);

// A model archive re-opened for evaluation/prediction. The vocabulary lives
// behind a stable pointer because the task models point into it.
struct LoadedModel {
  RunConfig config;
  std::shared_ptr<Vocabulary> vocab;
  ModelGraph<float> graph;
  std::optional<KgeModel<float>> kge;
  std::optional<LmModel<float>> lm;
  std::optional<TyperModel<float>> typer;
  ThresholdTable thresholds;
};

LoadedModel load_model(const std::string& path);

// task: kge | et | lm (joint archives carry both of their submodels).
EvalReport run_eval(LoadedModel& model, const std::string& task, const std::string& data_path,
                    bool lenient = false);

// Splits of a joint corpus as consumed by the joint trainer and by the
// standalone baselines run on the same file: one vocabulary over train-split
// sentences plus train-split triples, dev/test triples balanced with seeded
// corruptions.
struct JointSplits {
  std::vector<std::vector<std::string>> train_sentences, dev_sentences, test_sentences;
  std::vector<Triple> train_triples;  // deduplicated positives
  std::vector<Triple> dev_triples, test_triples;  // labeled, 1:1 corrupted
  VocabCounter vocab_counter;
};

JointSplits prepare_joint_corpus(const std::string& path, double train_frac, double dev_frac,
                                 std::uint64_t seed, bool lenient = false);

void append_report(const std::string& out_dir, const EvalReport& report);

}  // namespace jket
