#include "sorf/tree.hpp"

#include <numeric>
#include <stdexcept>

namespace sorf {

TreeNode tree_root(const DiscretizedDataset& ds) {
  if (ds.n < 1) throw std::invalid_argument("tree_root: empty dataset");
  TreeNode root;
  root.seg = full_segment(ds.s);
  root.tau = 0;
  root.matched.resize(ds.n);
  std::iota(root.matched.begin(), root.matched.end(), 0);
  return root;
}

namespace {

std::vector<std::int32_t> filter_matched(const std::vector<std::int32_t>& matched,
                                         const std::vector<std::int32_t>& column,
                                         std::int32_t lo, std::int32_t hi) {
  std::vector<std::int32_t> out;
  out.reserve(matched.size());
  for (std::int32_t i : matched) {
    if (column[i] >= lo && column[i] <= hi) out.push_back(i);
  }
  return out;
}

}  // namespace

std::vector<TreeNode> tree_children(const TreeNode& node, const DiscretizedDataset& ds,
                                    int max_features) {
  std::vector<TreeNode> children;
  const int constrained = constrained_feature_count(node.seg, ds.s);
  for (int j = node.tau; j < ds.d; ++j) {
    const std::int32_t lo = node.seg.lo[j], hi = node.seg.hi[j];
    if (lo >= hi) continue;
    const bool is_new = lo == 0 && hi == ds.s[j] - 1;
    if (max_features >= 0 && is_new && constrained >= max_features) continue;
    if (lo == 0) {
      TreeNode child;
      child.seg = node.seg;
      child.seg.hi[j] = hi - 1;
      child.tau = j;
      child.matched = filter_matched(node.matched, ds.levels[j], lo, hi - 1);
      children.push_back(std::move(child));
    }
    TreeNode child;
    child.seg = node.seg;
    child.seg.lo[j] = lo + 1;
    child.tau = j;
    child.matched = filter_matched(node.matched, ds.levels[j], lo + 1, hi);
    children.push_back(std::move(child));
  }
  return children;
}

void enumerate_all(const DiscretizedDataset& ds, int max_features,
                   const std::function<void(const TreeNode&)>& fn) {
  const std::function<void(const TreeNode&)> walk = [&](const TreeNode& node) {
    fn(node);
    for (const TreeNode& child : tree_children(node, ds, max_features)) walk(child);
  };
  walk(tree_root(ds));
}

void enumerate_segments(std::span<const std::int32_t> s, int max_features,
                        const std::function<void(const RuleSegment&)>& fn) {
  struct Walker {
    std::span<const std::int32_t> s;
    int max_features;
    const std::function<void(const RuleSegment&)>& fn;

    void walk(RuleSegment& seg, int tau, int constrained) {
      fn(seg);
      for (int j = tau; j < static_cast<int>(s.size()); ++j) {
        const std::int32_t lo = seg.lo[j], hi = seg.hi[j];
        if (lo >= hi) continue;
        const bool is_new = lo == 0 && hi == s[j] - 1;
        if (max_features >= 0 && is_new && constrained >= max_features) continue;
        const int child_constrained = constrained + (is_new ? 1 : 0);
        if (lo == 0) {
          seg.hi[j] = hi - 1;
          walk(seg, j, child_constrained);
          seg.hi[j] = hi;
        }
        seg.lo[j] = lo + 1;
        walk(seg, j, child_constrained);
        seg.lo[j] = lo;
      }
    }
  };
  RuleSegment seg = full_segment(s);
  Walker{s, max_features, fn}.walk(seg, 0, 0);
}

}  // namespace sorf
