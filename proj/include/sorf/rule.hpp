#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sorf/bigint.hpp"

namespace sorf {

// Integer hyperrectangle over discretized feature space: feature j matches
// levels lo[j]..hi[j] inclusive. A valid segment has 0 <= lo <= hi <= s-1
// coordinatewise; the full segment (0, s-1) matches every sample.
struct RuleSegment {
  std::vector<std::int32_t> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool operator==(const RuleSegment&) const = default;
  auto operator<=>(const RuleSegment&) const = default;  // lexicographic (lo, hi)
};

using RuleSet = std::vector<RuleSegment>;  // ordered, no duplicates

RuleSegment full_segment(std::span<const std::int32_t> s);
bool segment_valid(const RuleSegment& seg, std::span<const std::int32_t> s);
bool is_full_segment(const RuleSegment& seg, std::span<const std::int32_t> s);

// Number of features j with (lo[j], hi[j]) != (0, s[j]-1).
int constrained_feature_count(const RuleSegment& seg, std::span<const std::int32_t> s);

// 1 iff lo[j] <= x[j] <= hi[j] for all j.
bool evaluate(const RuleSegment& seg, std::span<const std::int32_t> xbar);

// prod_j s_j(s_j+1)/2 - 1: all non-empty segments except the full one.
BigUint count_all_rules(std::span<const std::int32_t> s);
// prod_j s_j(s_j+1)/2: every node of the enumeration tree, full segment included.
BigUint count_all_segments(std::span<const std::int32_t> s);

// Number of discretized grid points the segment matches: prod_j (hi-lo+1).
BigUint volume(const RuleSegment& seg);

// |A n B| / |A u B| over matched grid points; 1 iff identical segments.
double jaccard(const RuleSegment& a, const RuleSegment& b);

// Mean over r1 of the best Jaccard match in r2; nonsymmetric. Returns 0 for
// empty r2; throws for empty r1.
double similarity(const RuleSet& r1, const RuleSet& r2);

// Text form "j:lo..hi" joined by " & ", full-range features omitted.
// The full segment renders as "*".
std::string format_segment(const RuleSegment& seg, std::span<const std::int32_t> s);
RuleSegment parse_segment(const std::string& text, std::span<const std::int32_t> s);

// Depth-first preorder of the enumeration tree. A segment's generation path
// shrinks features in ascending order, all upper-bound decrements before
// lower-bound increments within a feature; this compares those op sequences.
bool tree_order_less(const RuleSegment& a, const RuleSegment& b,
                     std::span<const std::int32_t> s);

}  // namespace sorf
