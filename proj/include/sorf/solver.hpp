#pragma once

#include <cstdint>
#include <vector>

#include "sorf/discretizer.hpp"
#include "sorf/encoding.hpp"
#include "sorf/rule.hpp"
#include "sorf/screening.hpp"

namespace sorf {

struct SolverConfig {
  double gap_tolerance = 1e-6;
  int max_iterations = 100000;  // coordinate sweeps
  int screen_every = 10;        // sweeps between gap checks / dynamic screening
  std::int64_t survivor_cap = 5'000'000;
  int max_features = -1;  // rule space cap, must match the screening pass
  int threads = 1;
  int recompute_margins_every = 100;  // full residual recomputation cadence
  bool dynamic_screening = true;
};

struct SolveStats {
  int sweeps = 0;
  int gap_checks = 0;
  std::uint64_t tree_nodes_visited = 0;  // bounded max passes for certificates
  int dropped_rules = 0;
  int dropped_features = 0;
  std::vector<double> radius_trace;  // sphere radius at each gap check
};

// Cyclic coordinate descent on the problem restricted to the given linear
// features and rules: intercept first (exact 1-D minimization), then linear
// coefficients, then rule coefficients (exact minimization for the squared
// loss; a 1/L gradient step with soft-thresholding for the squared hinge).
// Convergence is certified against a dual point feasible for the full rule
// space, so active_rules only needs to contain the true active set for the
// certificate to reach the tolerance.
ModelState solve_restricted(const DiscretizedDataset& ds, const ProblemEncoding& enc,
                            const std::vector<int>& active_linear,
                            const RuleSet& active_rules, const ModelState& warm,
                            const SolverConfig& cfg, SolveStats* stats = nullptr);

// Declares the restricted solution as the full-problem optimum: rules outside
// the state carry coefficient zero. Drops zero coefficients and spot-checks
// |rule correlation| against lambda plus the sphere slack on randomly drawn
// non-survivor rules; a violation means the certificate machinery is broken
// and throws.
ModelState reconstruct_full(ModelState state, const DiscretizedDataset& ds,
                            const ProblemEncoding& enc, const SolverConfig& cfg,
                            std::uint64_t spot_check_seed = 1234, int spot_checks = 32);

// Exact minimizer step for the intercept given current margins: returns the
// delta to add to the intercept. Exposed for the intercept-only problems the
// path module solves.
double exact_intercept_step(std::span<const double> margin, const ProblemEncoding& enc);

}  // namespace sorf
