#include "jket/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <numeric>

#include <json.hpp>

#include "jket/error.hpp"

namespace jket {

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0 ? 2.0 * precision * recall / s : 0.0;
}

double auroc_rank(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) throw DataError("auroc", "scores/labels mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  long pos = 0, neg = 0;
  for (int y : labels) (y == 1 ? pos : neg)++;
  if (pos == 0 || neg == 0) throw DataError("auroc", "needs both classes");

  double rank_sum_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double aucpr_step(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) throw DataError("aucpr", "scores/labels mismatch");
  long pos = 0;
  for (int y : labels) pos += (y == 1);
  if (pos == 0) throw DataError("aucpr", "needs at least one positive");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double area = 0;
  double prev_recall = 0;
  long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      (labels[order[k]] == 1 ? tp : fp)++;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j + 1;
  }
  return area;
}

BinaryMetrics binary_metrics(const std::vector<double>& scores, const std::vector<int>& predictions,
                             const std::vector<int>& labels) {
  if (predictions.size() != labels.size() || scores.size() != labels.size() || labels.empty()) {
    throw DataError("binary_metrics", "empty or misaligned inputs");
  }
  long tp = 0, fp = 0, fn = 0, correct = 0;
  long pos = 0, neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? pos : neg)++;
    if (predictions[i] == labels[i]) ++correct;
    if (predictions[i] == 1 && labels[i] == 1) ++tp;
    if (predictions[i] == 1 && labels[i] == 0) ++fp;
    if (predictions[i] == 0 && labels[i] == 1) ++fn;
  }
  BinaryMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  if (pos > 0 && neg > 0) m.auroc = auroc_rank(scores, labels);
  if (pos > 0) m.aucpr = aucpr_step(scores, labels);
  return m;
}

TypingMetrics typing_metrics(const std::vector<std::set<int>>& predicted, const std::vector<std::set<int>>& gold) {
  if (predicted.size() != gold.size() || predicted.empty()) {
    throw DataError("typing_metrics", "empty or misaligned prediction/gold sets");
  }
  const double n = static_cast<double>(predicted.size());
  long exact = 0;
  double macro_p = 0, macro_r = 0;
  long long inter_sum = 0, pred_sum = 0, gold_sum = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto& p = predicted[i];
    const auto& g = gold[i];
    std::vector<int> inter;
    std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(inter));
    const double isz = static_cast<double>(inter.size());
    if (p == g) ++exact;
    macro_p += p.empty() ? (g.empty() ? 1.0 : 0.0) : isz / static_cast<double>(p.size());
    macro_r += g.empty() ? (p.empty() ? 1.0 : 0.0) : isz / static_cast<double>(g.size());
    inter_sum += static_cast<long long>(inter.size());
    pred_sum += static_cast<long long>(p.size());
    gold_sum += static_cast<long long>(g.size());
  }
  TypingMetrics m;
  m.strict_precision = m.strict_recall = static_cast<double>(exact) / n;
  m.strict_f1 = f1_score(m.strict_precision, m.strict_recall);
  m.loose_macro_precision = macro_p / n;
  m.loose_macro_recall = macro_r / n;
  m.loose_macro_f1 = f1_score(m.loose_macro_precision, m.loose_macro_recall);
  m.loose_micro_precision = pred_sum > 0 ? static_cast<double>(inter_sum) / static_cast<double>(pred_sum)
                                         : (inter_sum == 0 ? 1.0 : 0.0);
  m.loose_micro_recall = gold_sum > 0 ? static_cast<double>(inter_sum) / static_cast<double>(gold_sum)
                                      : (inter_sum == 0 ? 1.0 : 0.0);
  m.loose_micro_f1 = f1_score(m.loose_micro_precision, m.loose_micro_recall);
  return m;
}

void EvalReport::validate() const {
  for (const auto& [name, value] : metrics) {
    if (name == "perplexity" || name == "baseline_perplexity" || name == "loss") {
      if (name != "loss" && value < 1.0 - 1e-9) throw DataError("eval_report", name + " below 1: " + std::to_string(value));
    } else if (value < -1e-9 || value > 1.0 + 1e-9) {
      throw DataError("eval_report", name + " outside [0,1]: " + std::to_string(value));
    }
  }
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["task"] = task;
  j["dataset"] = dataset;
  j["seed"] = seed;
  j["timestamp"] = timestamp;
  j["metrics"] = nlohmann::json::object();
  for (const auto& [name, value] : metrics) j["metrics"][name] = value;
  return j.dump();
}

EvalReport EvalReport::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw FormatError("eval_report", "invalid JSON");
  EvalReport r;
  r.task = j.value("task", "");
  r.dataset = j.value("dataset", "");
  r.seed = j.value("seed", std::uint64_t(0));
  r.timestamp = j.value("timestamp", "");
  if (j.contains("metrics")) {
    for (auto it = j["metrics"].begin(); it != j["metrics"].end(); ++it) {
      r.metrics[it.key()] = it.value().get<double>();
    }
  }
  return r;
}

bool EvalReport::same_results(const EvalReport& other) const {
  return task == other.task && dataset == other.dataset && seed == other.seed && metrics == other.metrics;
}

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace jket
