#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace jket {

double f1_score(double precision, double recall);

// Rank-statistic AUROC (Mann-Whitney U with ties averaged). Labels are 0/1;
// requires both classes present.
double auroc_rank(const std::vector<double>& scores, const std::vector<int>& labels);

// Precision-recall step integration: descending score sweep, equal scores
// grouped into one step, area = sum (R_k - R_{k-1}) * P_k. Requires at least
// one positive.
double aucpr_step(const std::vector<double>& scores, const std::vector<int>& labels);

struct BinaryMetrics {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::optional<double> auroc;  // absent on single-class data
  std::optional<double> aucpr;  // absent without positives
};

BinaryMetrics binary_metrics(const std::vector<double>& scores, const std::vector<int>& predictions,
                             const std::vector<int>& labels);

// Entity-typing set metrics. Strict counts exact set matches; Loose Macro
// averages per-instance set precision/recall before the F1; Loose Micro pools
// intersection counts over the corpus. Empty-set conventions: an empty
// prediction has precision 1 against an empty gold and 0 otherwise, and
// symmetrically for recall of an empty gold.
struct TypingMetrics {
  double strict_precision = 0, strict_recall = 0, strict_f1 = 0;
  double loose_macro_precision = 0, loose_macro_recall = 0, loose_macro_f1 = 0;
  double loose_micro_precision = 0, loose_micro_recall = 0, loose_micro_f1 = 0;
};

TypingMetrics typing_metrics(const std::vector<std::set<int>>& predicted, const std::vector<std::set<int>>& gold);

// Task-tagged metric map as written to reports.jsonl. The timestamp is
// informational and excluded from reproducibility comparisons.
struct EvalReport {
  std::string task;
  std::string dataset;
  std::uint64_t seed = 0;
  std::string timestamp;
  std::map<std::string, double> metrics;

  void validate() const;  // bounded metrics in [0,1], perplexity >= 1
  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
  bool same_results(const EvalReport& other) const;  // everything but timestamp
};

std::string iso8601_now();

}  // namespace jket
