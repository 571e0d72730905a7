#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sorf/discretizer.hpp"
#include "sorf/encoding.hpp"
#include "sorf/screening.hpp"
#include "sorf/solver.hpp"

namespace sorf {

struct PathConfig {
  int steps = 100;                // lambda grid points after lambda_max
  double lambda_min_ratio = 0.01; // end of the grid relative to lambda_max
  double lambda_end = 0.0;        // >0: grid ends exactly here instead
  bool tie_rho = true;            // rho = lambda along the path
  double fixed_rho = 1.0;         // used when tie_rho is false
  int max_features = -1;
  int stop_at_active_rules = -1;  // >=0: stop once this many rules are active
  std::vector<double> explicit_grid;  // overrides the log-spaced grid (CV folds)
};

struct PathStep {
  double lambda = 0.0;
  double rho = 0.0;
  ModelState model;  // zero coefficients trimmed
  std::size_t survivors = 0;
  std::size_t active_rules = 0;
  std::uint64_t screen_nodes = 0;  // survivor traversal of this step
  std::uint64_t total_nodes = 0;   // plus all certificate passes of this step
  int sweeps = 0;
  double wall_seconds = 0.0;
  bool converged = true;
};

struct PathResult {
  double lambda_max = 0.0;
  std::uint64_t lambda_max_nodes = 0;
  std::vector<PathStep> steps;  // steps[0] is the lambda_max step
};

// Smallest penalty at which every coefficient is zero: the larger of the
// feature and rule correlation maxima against the dual point of the
// intercept-only optimum. The rule term is an exact bounded tree traversal.
double lambda_max(const DiscretizedDataset& ds, const ProblemEncoding& enc,
                  const ScreenConfig& cfg, std::uint64_t* visited = nullptr);

// Intercept-only optimum and its dual point (the weights of lambda_max).
struct InterceptOnly {
  double intercept = 0.0;
  std::vector<double> theta;
};
InterceptOnly intercept_only_optimum(const ProblemEncoding& enc);

// Warm-started decreasing-lambda sweep: each step reuses the previous
// solution as the feasible pair for one screening traversal and as the warm
// start for the restricted solve.
PathResult run_path(const DiscretizedDataset& ds, const ProblemEncoding& enc_base,
                    const PathConfig& pcfg, const SolverConfig& scfg);

enum class SelectKind { FixedLambda, ActiveRuleCount, CrossValidation };

struct SelectCriterion {
  SelectKind kind = SelectKind::FixedLambda;
  double lambda = 0.0;  // FixedLambda
  int count = 0;        // ActiveRuleCount
  int folds = 2;        // CrossValidation
};

// Index of the selected step. CrossValidation requires one score per step
// (lower is better); ties resolve toward larger lambda.
std::size_t select_model(const PathResult& path, const SelectCriterion& criterion,
                         std::span<const double> cv_scores = {});

}  // namespace sorf
