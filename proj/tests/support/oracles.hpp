#pragma once

// Brute-force reference implementations used to check the production metric
// code. Deliberately naive (quadratic sweeps, scalar loops) and written
// against the mathematical definitions only; they share no code with the
// library paths they verify.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace oracle {

// AUROC as the probability a random positive outranks a random negative,
// ties counting a half, by direct pairwise comparison.
inline double auroc_pairwise(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

// Area under the precision-recall step curve by recounting TP/FP from
// scratch at every distinct threshold, descending.
inline double aucpr_sweep(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  long total_pos = 0;
  for (int y : labels) total_pos += (y == 1);

  double area = 0, prev_recall = 0;
  for (double th : thresholds) {
    long tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= th) (labels[i] == 1 ? tp : fp)++;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

struct Prf {
  double precision = 0, recall = 0, f1 = 0, accuracy = 0;
};

inline Prf prf_counts(const std::vector<int>& predictions, const std::vector<int>& labels) {
  long tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    correct += predictions[i] == labels[i];
    tp += predictions[i] == 1 && labels[i] == 1;
    fp += predictions[i] == 1 && labels[i] == 0;
    fn += predictions[i] == 0 && labels[i] == 1;
  }
  Prf m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0;
  m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0;
  return m;
}

// Exhaustive threshold sweep over a dense grid of candidate cuts (every
// score midpoint plus outside sentinels); reference for fit_thresholds.
inline double best_accuracy_any_threshold(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<double> cands = scores;
  std::sort(cands.begin(), cands.end());
  std::vector<double> sweep;
  sweep.push_back(cands.front() - 1.0);
  for (std::size_t i = 0; i + 1 < cands.size(); ++i) sweep.push_back((cands[i] + cands[i + 1]) / 2);
  sweep.push_back(cands.back() + 1.0);
  double best = 0;
  for (double th : sweep) {
    long correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) correct += (scores[i] > th ? 1 : 0) == labels[i];
    best = std::max(best, static_cast<double>(correct) / static_cast<double>(scores.size()));
  }
  return best;
}

struct TypingScores {
  double strict_f1, macro_p, macro_r, macro_f1, micro_p, micro_r, micro_f1;
};

// Set-arithmetic typing metrics straight from the definitions.
inline TypingScores typing_sets(const std::vector<std::set<int>>& pred, const std::vector<std::set<int>>& gold) {
  const double n = static_cast<double>(pred.size());
  double exact = 0, mp = 0, mr = 0;
  double inter_total = 0, pred_total = 0, gold_total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double inter = 0;
    for (int t : pred[i]) inter += gold[i].count(t);
    if (pred[i] == gold[i]) exact += 1;
    mp += pred[i].empty() ? (gold[i].empty() ? 1.0 : 0.0) : inter / static_cast<double>(pred[i].size());
    mr += gold[i].empty() ? (pred[i].empty() ? 1.0 : 0.0) : inter / static_cast<double>(gold[i].size());
    inter_total += inter;
    pred_total += static_cast<double>(pred[i].size());
    gold_total += static_cast<double>(gold[i].size());
  }
  auto f1 = [](double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; };
  TypingScores s{};
  s.strict_f1 = exact / n;
  s.macro_p = mp / n;
  s.macro_r = mr / n;
  s.macro_f1 = f1(s.macro_p, s.macro_r);
  s.micro_p = pred_total > 0 ? inter_total / pred_total : (inter_total == 0 ? 1.0 : 0.0);
  s.micro_r = gold_total > 0 ? inter_total / gold_total : (inter_total == 0 ? 1.0 : 0.0);
  s.micro_f1 = f1(s.micro_p, s.micro_r);
  return s;
}

// Perplexity from independently accumulated per-sentence NLL sums and token
// counts.
inline double perplexity_accumulate(const std::vector<std::pair<double, long>>& sentence_nll) {
  double nll = 0;
  long tokens = 0;
  for (const auto& [s, t] : sentence_nll) {
    nll += s;
    tokens += t;
  }
  return std::exp(nll / static_cast<double>(tokens));
}

}  // namespace oracle
