#include "sorf/discretizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace sorf {

namespace {

void check_matrix(const std::vector<std::vector<double>>& columns) {
  if (columns.empty()) throw std::invalid_argument("discretize: no feature columns");
  const std::size_t n = columns[0].size();
  if (n == 0) throw std::invalid_argument("discretize: no samples");
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != n) throw std::invalid_argument("discretize: ragged columns");
    for (double v : columns[j]) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("discretize: non-finite value in feature " +
                                    std::to_string(j));
      }
    }
  }
}

std::vector<int> sort_order(const std::vector<double>& col) {
  std::vector<int> order(col.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&col](int a, int b) { return col[a] < col[b]; });
  return order;
}

// Assign levels given cut positions: a cut at c separates sorted ranks
// [0..c] from [c+1..]. Cuts always sit between distinct values.
void assign_levels(const std::vector<double>& col, const std::vector<int>& order,
                   const std::set<int>& cuts, std::vector<std::int32_t>& out,
                   std::vector<double>& lev_min, std::vector<double>& lev_max) {
  const int n = static_cast<int>(col.size());
  out.resize(n);
  std::int32_t level = 0;
  for (int r = 0; r < n; ++r) {
    out[order[r]] = level;
    if (cuts.count(r)) ++level;
  }
  lev_min.assign(level + 1, std::numeric_limits<double>::infinity());
  lev_max.assign(level + 1, -std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i) {
    lev_min[out[i]] = std::min(lev_min[out[i]], col[i]);
    lev_max[out[i]] = std::max(lev_max[out[i]], col[i]);
  }
}

}  // namespace

std::vector<std::int32_t> DiscretizedDataset::row(int i) const {
  std::vector<std::int32_t> out(d);
  for (int j = 0; j < d; ++j) out[j] = levels[j][i];
  return out;
}

double DiscretizedDataset::threshold(int j, int level) const {
  double a = level_max[j][level];
  double b = level_min[j][level + 1];
  double t = a + (b - a) / 2.0;
  // Guard rounding on adjacent representable values: the boundary must stay
  // strictly below the next level's minimum so training rows round-trip.
  if (!(t < b)) t = a;
  if (t < a) t = a;
  return t;
}

DiscretizedDataset discretize_interval(const std::vector<std::vector<double>>& columns,
                                       double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw std::invalid_argument("discretize_interval: delta must be in [0,1)");
  }
  check_matrix(columns);
  DiscretizedDataset ds;
  ds.d = static_cast<int>(columns.size());
  ds.n = static_cast<int>(columns[0].size());
  ds.levels.resize(ds.d);
  ds.s.resize(ds.d);
  ds.level_min.resize(ds.d);
  ds.level_max.resize(ds.d);
  for (int j = 0; j < ds.d; ++j) {
    const auto& col = columns[j];
    auto order = sort_order(col);
    double lo = col[order.front()], hi = col[order.back()];
    double gap_threshold = delta * (hi - lo);
    std::set<int> cuts;
    for (int r = 0; r + 1 < ds.n; ++r) {
      if (col[order[r + 1]] - col[order[r]] > gap_threshold) cuts.insert(r);
    }
    assign_levels(col, order, cuts, ds.levels[j], ds.level_min[j], ds.level_max[j]);
    ds.s[j] = static_cast<std::int32_t>(ds.level_min[j].size());
  }
  return ds;
}

DiscretizedDataset discretize_quantile(const std::vector<std::vector<double>>& columns,
                                       int quantiles) {
  if (quantiles < 2) throw std::invalid_argument("discretize_quantile: need at least 2");
  check_matrix(columns);
  DiscretizedDataset ds;
  ds.d = static_cast<int>(columns.size());
  ds.n = static_cast<int>(columns[0].size());
  ds.levels.resize(ds.d);
  ds.s.resize(ds.d);
  ds.level_min.resize(ds.d);
  ds.level_max.resize(ds.d);
  const int n = ds.n;
  for (int j = 0; j < ds.d; ++j) {
    const auto& col = columns[j];
    auto order = sort_order(col);
    // sorted values by rank, 0-based
    auto value_at = [&](int rank) { return col[order[rank]]; };
    std::set<int> cuts;  // cut at c separates ranks c and c+1
    for (int m = 1; m < quantiles; ++m) {
      double q = 1.0 + static_cast<double>(n - 1) * m / quantiles;  // 1-based rank
      int fl = static_cast<int>(std::floor(q)) - 1;  // 0-based
      int ce = static_cast<int>(std::ceil(q)) - 1;
      if (value_at(fl) != value_at(ce)) {
        cuts.insert(fl);
        continue;
      }
      // Both ends of the quantile index fall inside one run of equal values;
      // move the cut to the nearer edge of the run, skipping if the run
      // touches the column boundary.
      double v = value_at(fl);
      int first = fl, last = fl;
      while (first > 0 && value_at(first - 1) == v) --first;
      while (last + 1 < n && value_at(last + 1) == v) ++last;
      // Positions back in 1-based terms to mirror the rule's midpoint test.
      if (q <= (static_cast<double>(first + 1) + static_cast<double>(last + 1)) / 2.0) {
        if (first > 0) cuts.insert(first - 1);
      } else {
        if (last + 1 < n) cuts.insert(last);
      }
    }
    assign_levels(col, order, cuts, ds.levels[j], ds.level_min[j], ds.level_max[j]);
    ds.s[j] = static_cast<std::int32_t>(ds.level_min[j].size());
  }
  return ds;
}

DiscretizedDataset discretize(const std::vector<std::vector<double>>& columns,
                              const DiscretizationSpec& spec) {
  return spec.scheme == DiscretizeScheme::Interval
             ? discretize_interval(columns, spec.delta)
             : discretize_quantile(columns, spec.quantiles);
}

OriginalInterval segment_to_original(const RuleSegment& seg, const DiscretizedDataset& ds) {
  if (!segment_valid(seg, ds.s)) {
    throw std::invalid_argument("segment_to_original: segment invalid for dataset");
  }
  OriginalInterval iv;
  iv.lower.resize(ds.d);
  iv.upper.resize(ds.d);
  for (int j = 0; j < ds.d; ++j) {
    iv.lower[j] = seg.lo[j] == 0 ? -std::numeric_limits<double>::infinity()
                                 : ds.threshold(j, seg.lo[j] - 1);
    iv.upper[j] = seg.hi[j] == ds.s[j] - 1 ? std::numeric_limits<double>::infinity()
                                           : ds.threshold(j, seg.hi[j]);
  }
  return iv;
}

std::vector<std::int32_t> discretize_apply(std::span<const double> x,
                                           const DiscretizedDataset& ds) {
  if (static_cast<int>(x.size()) != ds.d) {
    throw std::invalid_argument("discretize_apply: dimension mismatch");
  }
  std::vector<std::int32_t> out(ds.d);
  for (int j = 0; j < ds.d; ++j) {
    if (!std::isfinite(x[j])) {
      throw std::invalid_argument("discretize_apply: non-finite value");
    }
    std::int32_t level = 0;
    while (level < ds.s[j] - 1 && x[j] > ds.threshold(j, level)) ++level;
    out[j] = level;
  }
  return out;
}

namespace {

std::string format_bound(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::string format_interval(const RuleSegment& seg, const DiscretizedDataset& ds) {
  OriginalInterval iv = segment_to_original(seg, ds);
  std::string out;
  for (int j = 0; j < ds.d; ++j) {
    if (seg.lo[j] == 0 && seg.hi[j] == ds.s[j] - 1) continue;
    if (!out.empty()) out += " & ";
    std::string name = j < static_cast<int>(ds.source_columns.size())
                           ? ds.source_columns[j]
                           : "x" + std::to_string(j);
    out += name + " in (" + format_bound(iv.lower[j]) + ", " + format_bound(iv.upper[j]);
    out += std::isinf(iv.upper[j]) ? ")" : "]";
  }
  return out.empty() ? "any" : out;
}

}  // namespace sorf
