#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sorf/discretizer.hpp"
#include "sorf/encoding.hpp"
#include "sorf/rule.hpp"

namespace sorf {

// Fully materialized small instance: d task-encoded linear columns followed
// by one task-encoded column per rule, in tree preorder. Ground truth for the
// screened pipeline; deliberately shares nothing with it beyond rule
// evaluation, so agreement between the two is evidence.
struct DenseInstance {
  int n = 0, d = 0;
  Task task = Task::Regression;
  std::vector<double> labels;
  std::vector<std::vector<std::int32_t>> rows;     // discretized samples
  std::vector<std::vector<double>> columns;        // d + |R| columns
  std::vector<RuleSegment> rule_segments;          // parallel to rule columns

  double beta(int i) const { return task == Task::Classification ? labels[i] : 1.0; }
  double gamma(int i) const { return task == Task::Classification ? 0.0 : -labels[i]; }
  double delta(int i) const { return task == Task::Classification ? 1.0 : labels[i]; }
};

// Enumerates rules by direct recursion over per-feature ranges (no tree
// machinery) and sorts them into tree order. Throws when the rule count
// exceeds the cap.
DenseInstance materialize(const DiscretizedDataset& ds, const ProblemEncoding& enc,
                          std::size_t cap = 20000, int max_features = -1);

struct OracleSolution {
  std::vector<double> eta;   // d linear coefficients
  std::vector<double> zeta;  // |R| rule coefficients
  double intercept = 0.0;
  std::vector<double> theta;
  double primal = 0.0, dual = 0.0, gap = 0.0;
  bool converged = false;
  std::vector<std::size_t> active_rules;  // indices with nonzero zeta
};

// Plain cyclic coordinate descent over every column, no screening anywhere.
OracleSolution brute_solve(const DenseInstance& inst, double rho, double lambda,
                           double tol, int max_sweeps = 200000);

// Exhaustive max over rules of |sum_i weights_i r_k(x_i)|.
double brute_rule_max(const DenseInstance& inst, std::span<const double> weights);

}  // namespace sorf
