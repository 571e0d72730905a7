#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sorf/discretizer.hpp"
#include "sorf/rule.hpp"

namespace sorf {

// Node of the lazy enumeration tree over all rule segments. Children shrink
// one feature of the parent segment by a single step, restricted to features
// at or after tau so every segment is generated exactly once.
struct TreeNode {
  RuleSegment seg;
  int tau = 0;  // last shrunk feature (0-based); 0 at the root by convention
  std::vector<std::int32_t> matched;  // ascending sample indices the segment matches
};

TreeNode tree_root(const DiscretizedDataset& ds);

// Children in generation order: features tau..d-1; per feature the
// upper-bound decrement (only while the lower bound is still 0) precedes the
// lower-bound increment. Matched lists are filtered from the parent by
// re-testing feature j only. max_features < 0 disables the cap; otherwise
// children constraining a new feature beyond the cap are not generated.
std::vector<TreeNode> tree_children(const TreeNode& node, const DiscretizedDataset& ds,
                                    int max_features = -1);

// Depth-first preorder stream of every node exactly once, root included.
void enumerate_all(const DiscretizedDataset& ds, int max_features,
                   const std::function<void(const TreeNode&)>& fn);

// Same stream over segments only, no dataset required.
void enumerate_segments(std::span<const std::int32_t> s, int max_features,
                        const std::function<void(const RuleSegment&)>& fn);

}  // namespace sorf
