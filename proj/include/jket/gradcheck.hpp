#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jket/tensor.hpp"

namespace jket {

// Central finite differences in 64-bit mode against the tape gradients.
// `forward` must rebuild the scalar loss from the current parameter values;
// it runs once under a tape for the analytic pass, then twice per parameter
// element (no tape) for the numeric pass. Elements failing at the base step
// are retried at h/100, which separates genuine backward bugs from ReLU-kink
// straddles.
double gradcheck_max_rel_error(std::vector<Tensor<double>> params,
                               const std::function<Tensor<double>()>& forward, double h = 1e-5,
                               double tolerance = 1e-4);

struct GradCheckCase {
  std::string name;
  int instances = 0;
  double max_rel_err = 0;
  bool pass = false;
};

struct GradCheckSummary {
  std::vector<GradCheckCase> cases;
  bool all_pass = false;
  double worst = 0;

  void add(GradCheckCase c) {
    cases.push_back(std::move(c));
  }
  void finish() {
    all_pass = true;
    worst = 0;
    for (const GradCheckCase& c : cases) {
      all_pass = all_pass && c.pass;
      worst = std::max(worst, c.max_rel_err);
    }
  }
};

// The standard suite: every primitive op, a family of composed graphs, and
// the three full model losses (triple-classification cross-entropy, typing
// hinge, LM NLL), each over `instances_per_case` seeded random instances.
GradCheckSummary run_gradcheck_suite(std::uint64_t seed, int instances_per_case = 50,
                                     int composed_instances = 200);

}  // namespace jket
