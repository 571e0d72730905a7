#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sorf/discretizer.hpp"
#include "sorf/rule.hpp"

namespace sorf {

enum class Task { Regression, Classification };

// Smooth convex loss: half squared error for regression, half squared hinge
// for classification.
double loss_value(double u, Task task);
double loss_grad(double u, Task task);

// Task constants that let one primal/dual pair cover both problems. Linear
// feature columns are stored pre-multiplied (x for regression, y*x for
// classification); rule columns are never materialized, a rule's column entry
// is beta_i on matched samples and 0 elsewhere.
struct ProblemEncoding {
  Task task = Task::Regression;
  int n = 0, d = 0;
  std::vector<double> alpha_hat;  // n*d, column-major
  std::vector<double> labels;
  double rho = 1.0, lambda = 1.0;

  double beta(int i) const { return task == Task::Classification ? labels[i] : 1.0; }
  double gamma(int i) const { return task == Task::Classification ? 0.0 : -labels[i]; }
  double delta(int i) const { return task == Task::Classification ? 1.0 : labels[i]; }

  std::span<const double> alpha_hat_col(int j) const {
    return std::span<const double>(alpha_hat).subspan(static_cast<std::size_t>(j) * n, n);
  }

  static ProblemEncoding make(Task task, const std::vector<std::vector<double>>& columns,
                              std::vector<double> labels, double rho, double lambda);
};

// Primal coefficients plus the dual certificate they were last scored with.
struct ModelState {
  std::vector<double> eta;         // dense over linear features
  RuleSet rules;                   // active rules, tree order
  std::vector<double> zeta;        // parallel to rules
  double intercept = 0.0;
  std::vector<double> theta;       // dual point the gap was computed against
  double primal = 0.0, dual = 0.0, gap = 0.0;
  bool converged = false;
  int iterations = 0;

  static ModelState zero(int d);
};

// Per-sample inner argument of the loss: alpha_hat_i'eta + alpha_tilde_i'zeta
// + beta_i b + gamma_i.
std::vector<double> margins(const ModelState& state, const ProblemEncoding& enc,
                            const DiscretizedDataset& ds);

double primal_value(const ModelState& state, const ProblemEncoding& enc,
                    const DiscretizedDataset& ds);
double dual_value(std::span<const double> theta, const ProblemEncoding& enc);

// Exact max_k |sum_i weights_i r_k(x_i)| over the rule space whenever it
// exceeds lower_bound; any value <= lower_bound certifies no rule does.
using RuleMaxFn = std::function<double(std::span<const double>, double)>;

// Builds a dual-feasible point from the state's primal residuals: the
// unconstrained candidate -loss_grad(margin), projected onto beta'theta = 0
// (alternated with clipping to theta >= 0 for classification), then shrunk by
// the largest factor that satisfies every linear and rule constraint. The
// rule constraint max is certified by rule_max over the whole rule space, so
// the point is feasible for the full problem, not just an active subset.
std::vector<double> dual_feasible_point(const ModelState& state, const ProblemEncoding& enc,
                                        const DiscretizedDataset& ds,
                                        const RuleMaxFn& rule_max);

// Same construction when the caller already maintains the margins.
std::vector<double> dual_point_from_margins(std::span<const double> margin,
                                            const ProblemEncoding& enc,
                                            const RuleMaxFn& rule_max);

}  // namespace sorf
