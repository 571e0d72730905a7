#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sorf/discretizer.hpp"
#include "sorf/encoding.hpp"
#include "sorf/rule.hpp"
#include "sorf/tree.hpp"

namespace sorf {

// Ball in dual space that is guaranteed to contain the dual optimum: centered
// at any dual-feasible point, radius sqrt(2 * duality gap) of any primal
// feasible pairing.
struct SafeSphere {
  std::vector<double> center;
  double radius = 0.0;
};

SafeSphere sphere(const ModelState& state, const ProblemEncoding& enc);

// Largest |alpha_hat_j' theta| over the sphere intersected with the
// intercept hyperplane.
double ub_linear(int j, const SafeSphere& sphere, const ProblemEncoding& enc);

// Same bound for a rule column.
double ub_rule(const RuleSegment& seg, const SafeSphere& sphere, const ProblemEncoding& enc,
               const DiscretizedDataset& ds);

// Subtree-wide certificate: srpc = u + radius * sqrt(v) dominates ub_rule of
// every descendant, so srpc < lambda prunes the whole subtree.
struct SubtreeBound {
  double u = 0.0;   // one-sided matched-weight sum bound
  double v = 0.0;   // matched sample count (sum of squared rule entries)
  double srpc = 0.0;
};

SubtreeBound srpc_bound(const TreeNode& node, const SafeSphere& sphere,
                        const ProblemEncoding& enc);

// Linear features certified to have zero optimal coefficient.
std::vector<int> screen_linear(const ModelState& state, const ProblemEncoding& enc);

struct ScreenConfig {
  std::int64_t survivor_cap = 5'000'000;
  int max_features = -1;  // <0: no cap on constrained features per rule
  int threads = 1;        // 1: serial reference; 0: all cores; >1: that many
};

struct ScreenStats {
  std::uint64_t visited = 0;  // nodes whose bound was evaluated
  std::uint64_t pruned = 0;   // nodes whose whole subtree was skipped
  std::uint64_t survivors = 0;
};

// Depth-first traversal keeping every rule whose ub_rule is at least lambda
// and skipping entire subtrees whose srpc falls below it. Survivors come back
// in tree preorder. Throws if the survivor count exceeds the configured cap.
RuleSet screen_rules(const DiscretizedDataset& ds, const SafeSphere& sphere,
                     const ProblemEncoding& enc, double lambda, const ScreenConfig& cfg,
                     ScreenStats* stats = nullptr);
RuleSet screen_rules_serial(const DiscretizedDataset& ds, const SafeSphere& sphere,
                            const ProblemEncoding& enc, double lambda,
                            const ScreenConfig& cfg, ScreenStats* stats = nullptr);

// Exact max over all rules of |sum_i weights_i r_k(x_i)| whenever that max
// exceeds lower_bound; otherwise returns lower_bound, certifying no rule
// beats it. Subtrees are pruned with the one-sided weight-sum bound.
double max_rule_correlation(const DiscretizedDataset& ds, std::span<const double> weights,
                            double lower_bound, const ScreenConfig& cfg,
                            std::uint64_t* visited = nullptr);
double max_rule_correlation_serial(const DiscretizedDataset& ds,
                                   std::span<const double> weights, double lower_bound,
                                   const ScreenConfig& cfg,
                                   std::uint64_t* visited = nullptr);

// rule_max callback over this dataset honoring the feature cap; counts tree
// nodes into *visited when provided (pointer must outlive the callback).
RuleMaxFn make_rule_max(const DiscretizedDataset& ds, const ScreenConfig& cfg,
                        std::uint64_t* visited = nullptr);

}  // namespace sorf
