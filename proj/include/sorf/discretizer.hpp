#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sorf/rule.hpp"

namespace sorf {

enum class DiscretizeScheme { Interval, Quantile };

struct DiscretizationSpec {
  DiscretizeScheme scheme = DiscretizeScheme::Quantile;
  double delta = 0.0;  // Interval: adjacent sorted values split when their gap
                       // exceeds delta * (column max - column min); delta in [0,1)
  int quantiles = 5;   // Quantile: at most this many levels per feature; >= 2
};

// Integer-valued view of a real feature matrix. Levels are consecutive from 0,
// every level is attained by at least one training sample, and the
// level_min/level_max tables hold the original-value extremes per level so
// segments can be mapped back to original-space intervals.
struct DiscretizedDataset {
  int n = 0, d = 0;
  std::vector<std::vector<std::int32_t>> levels;  // [j][i]
  std::vector<std::int32_t> s;                    // alphabet size per feature
  std::vector<std::vector<double>> level_min;     // [j][level] smallest source value
  std::vector<std::vector<double>> level_max;     // [j][level] largest source value
  std::vector<std::string> source_columns;

  std::int32_t level(int i, int j) const { return levels[j][i]; }
  std::vector<std::int32_t> row(int i) const;

  // Original-space boundary between `level` and `level+1` of feature j,
  // taken at the midpoint of the adjacent level extremes. Values equal to the
  // boundary belong to the lower level.
  double threshold(int j, int level) const;
};

// Per-feature original-space box; -inf/+inf at unconstrained ends. Membership
// is open below and closed above at finite bounds.
struct OriginalInterval {
  std::vector<double> lower, upper;
};

DiscretizedDataset discretize_interval(const std::vector<std::vector<double>>& columns,
                                       double delta);
DiscretizedDataset discretize_quantile(const std::vector<std::vector<double>>& columns,
                                       int quantiles);
DiscretizedDataset discretize(const std::vector<std::vector<double>>& columns,
                              const DiscretizationSpec& spec);

OriginalInterval segment_to_original(const RuleSegment& seg, const DiscretizedDataset& ds);

// Level assignment for a new sample; out-of-range values clamp to the
// extreme levels, boundary ties go to the lower level.
std::vector<std::int32_t> discretize_apply(std::span<const double> x,
                                           const DiscretizedDataset& ds);

// Human-readable original-space rendering of a segment, e.g.
// "age in (24.5, 37.5] & weight in (-inf, 52]". Full-range features omitted;
// the full segment renders as "any".
std::string format_interval(const RuleSegment& seg, const DiscretizedDataset& ds);

}  // namespace sorf
