#include "sorf/screening.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sorf {

SafeSphere sphere(const ModelState& state, const ProblemEncoding& enc) {
  if (static_cast<int>(state.theta.size()) != enc.n) {
    throw std::invalid_argument("sphere: state carries no dual point");
  }
  SafeSphere sp;
  sp.center = state.theta;
  sp.radius = std::sqrt(2.0 * std::max(0.0, state.primal - state.dual));
  return sp;
}

double ub_linear(int j, const SafeSphere& sphere, const ProblemEncoding& enc) {
  auto col = enc.alpha_hat_col(j);
  double dot = 0.0, sq = 0.0, bdot = 0.0;
  for (int i = 0; i < enc.n; ++i) {
    dot += col[i] * sphere.center[i];
    sq += col[i] * col[i];
    bdot += col[i] * enc.beta(i);
  }
  const double arg = std::max(0.0, sq - bdot * bdot / enc.n);
  return std::abs(dot) + sphere.radius * std::sqrt(arg);
}

double ub_rule(const RuleSegment& seg, const SafeSphere& sphere, const ProblemEncoding& enc,
               const DiscretizedDataset& ds) {
  double dot = 0.0, v = 0.0;
  for (int i = 0; i < enc.n; ++i) {
    if (!evaluate(seg, ds.row(i))) continue;
    dot += enc.beta(i) * sphere.center[i];
    v += 1.0;
  }
  // Rule entries are beta_i on matched samples, so the squared column norm
  // and the intercept projection both reduce to the matched count.
  const double arg = std::max(0.0, v - v * v / enc.n);
  return std::abs(dot) + sphere.radius * std::sqrt(arg);
}

SubtreeBound srpc_bound(const TreeNode& node, const SafeSphere& sphere,
                        const ProblemEncoding& enc) {
  SubtreeBound bound;
  double pos = 0.0, neg = 0.0;
  for (std::int32_t i : node.matched) {
    const double w = enc.beta(i) * sphere.center[i];
    if (w > 0.0) {
      pos += w;
    } else {
      neg += w;
    }
  }
  bound.u = std::max(pos, -neg);
  bound.v = static_cast<double>(node.matched.size());
  bound.srpc = bound.u + sphere.radius * std::sqrt(bound.v);
  return bound;
}

std::vector<int> screen_linear(const ModelState& state, const ProblemEncoding& enc) {
  const SafeSphere sp = sphere(state, enc);
  std::vector<int> screened;
  for (int j = 0; j < enc.d; ++j) {
    if (ub_linear(j, sp, enc) < enc.rho) screened.push_back(j);
  }
  return screened;
}

namespace {

// Traversal state for one path node: the segment, its matched samples and
// the matched weight sums split by sign.
struct NodeCtx {
  RuleSegment seg;
  int tau = 0;
  int constrained = 0;
  std::vector<std::int32_t> matched;
  double pos = 0.0, neg = 0.0;
};

NodeCtx root_ctx(const DiscretizedDataset& ds, std::span<const double> weights) {
  NodeCtx root;
  root.seg = full_segment(ds.s);
  root.matched.resize(ds.n);
  for (int i = 0; i < ds.n; ++i) {
    root.matched[i] = i;
    if (weights[i] > 0.0) {
      root.pos += weights[i];
    } else {
      root.neg += weights[i];
    }
  }
  return root;
}

NodeCtx build_child(const DiscretizedDataset& ds, std::span<const double> weights,
                    const NodeCtx& node, int j, std::int32_t lo, std::int32_t hi,
                    int constrained) {
  NodeCtx child;
  child.seg = node.seg;
  child.seg.lo[j] = lo;
  child.seg.hi[j] = hi;
  child.tau = j;
  child.constrained = constrained;
  child.matched.reserve(node.matched.size());
  const auto& column = ds.levels[j];
  for (std::int32_t i : node.matched) {
    if (column[i] < lo || column[i] > hi) continue;
    child.matched.push_back(i);
    const double w = weights[i];
    if (w > 0.0) {
      child.pos += w;
    } else {
      child.neg += w;
    }
  }
  return child;
}

template <typename Fn>
void for_each_child(const DiscretizedDataset& ds, std::span<const double> weights,
                    int max_features, const NodeCtx& node, Fn&& fn) {
  for (int j = node.tau; j < ds.d; ++j) {
    const std::int32_t lo = node.seg.lo[j], hi = node.seg.hi[j];
    if (lo >= hi) continue;
    const bool is_new = lo == 0 && hi == ds.s[j] - 1;
    if (max_features >= 0 && is_new && node.constrained >= max_features) continue;
    const int child_constrained = node.constrained + (is_new ? 1 : 0);
    if (lo == 0) fn(build_child(ds, weights, node, j, lo, hi - 1, child_constrained));
    fn(build_child(ds, weights, node, j, lo + 1, hi, child_constrained));
  }
}

struct ScreenParams {
  const DiscretizedDataset& ds;
  std::span<const double> weights;
  double radius = 0.0;
  double lambda = 0.0;
  int max_features = -1;
  std::int64_t cap = 0;
};

// visit = bound test at node entry; descend only when the subtree bound
// is not strictly below lambda. Returns false once the survivor cap is hit.
bool screen_visit(const ScreenParams& p, const NodeCtx& node, bool is_root,
                  std::vector<RuleSegment>& out, ScreenStats& stats,
                  std::int64_t survivors_so_far) {
  ++stats.visited;
  const double v = static_cast<double>(node.matched.size());
  const double u = std::max(node.pos, -node.neg);
  const double srpc = u + p.radius * std::sqrt(v);
  if (srpc < p.lambda) {
    ++stats.pruned;
    return true;
  }
  if (!is_root) {
    const double dot = node.pos + node.neg;
    const double ub =
        std::abs(dot) + p.radius * std::sqrt(std::max(0.0, v - v * v / p.ds.n));
    if (ub >= p.lambda) {
      out.push_back(node.seg);
      if (survivors_so_far + static_cast<std::int64_t>(out.size()) > p.cap) return false;
    }
  }
  bool ok = true;
  for_each_child(p.ds, p.weights, p.max_features, node, [&](NodeCtx child) {
    if (ok) ok = screen_visit(p, child, false, out, stats, survivors_so_far);
  });
  return ok;
}

[[noreturn]] void throw_survivor_cap(std::int64_t cap) {
  throw std::runtime_error(
      "screen_rules: survivor set exceeds cap of " + std::to_string(cap) +
      "; increase lambda (or the cap) to keep the restricted problem tractable");
}

}  // namespace

RuleSet screen_rules_serial(const DiscretizedDataset& ds, const SafeSphere& sp,
                            const ProblemEncoding& enc, double lambda,
                            const ScreenConfig& cfg, ScreenStats* stats) {
  std::vector<double> weights(ds.n);
  for (int i = 0; i < ds.n; ++i) weights[i] = enc.beta(i) * sp.center[i];
  ScreenParams params{ds, weights, sp.radius, lambda, cfg.max_features, cfg.survivor_cap};
  ScreenStats local;
  RuleSet out;
  if (!screen_visit(params, root_ctx(ds, weights), true, out, local, 0)) {
    throw_survivor_cap(cfg.survivor_cap);
  }
  local.survivors = out.size();
  if (stats) *stats = local;
  return out;
}

namespace {

// Grow a work frontier near the root so subtrees can be handed to threads.
// Nodes popped here are fully visited; nodes left in the frontier are not.
template <typename Visit>
std::deque<NodeCtx> expand_frontier(const ScreenParams& p, std::size_t target,
                                    Visit&& visit) {
  std::deque<NodeCtx> frontier;
  frontier.push_back(root_ctx(p.ds, p.weights));
  bool is_root = true;
  std::size_t expanded = 0;
  while (!frontier.empty() && frontier.size() < target && expanded < 1024) {
    NodeCtx node = std::move(frontier.front());
    frontier.pop_front();
    ++expanded;
    if (visit(node, is_root)) {
      for_each_child(p.ds, p.weights, p.max_features, node,
                     [&](NodeCtx child) { frontier.push_back(std::move(child)); });
    }
    is_root = false;
  }
  return frontier;
}

void atomic_max(std::atomic<double>& target, double value) {
  double cur = target.load(std::memory_order_relaxed);
  while (value > cur &&
         !target.compare_exchange_weak(cur, value, std::memory_order_relaxed)) {
  }
}

int resolve_threads(int threads) {
#ifdef _OPENMP
  if (threads <= 0) return omp_get_max_threads();
  return threads;
#else
  (void)threads;
  return 1;
#endif
}

}  // namespace

RuleSet screen_rules(const DiscretizedDataset& ds, const SafeSphere& sp,
                     const ProblemEncoding& enc, double lambda, const ScreenConfig& cfg,
                     ScreenStats* stats) {
  const int threads = resolve_threads(cfg.threads);
  if (threads == 1) return screen_rules_serial(ds, sp, enc, lambda, cfg, stats);

  std::vector<double> weights(ds.n);
  for (int i = 0; i < ds.n; ++i) weights[i] = enc.beta(i) * sp.center[i];
  ScreenParams params{ds, weights, sp.radius, lambda, cfg.max_features, cfg.survivor_cap};

  ScreenStats shared_stats;
  RuleSet survivors;
  // Visiting during frontier expansion is single-threaded, so plain state.
  auto frontier = expand_frontier(params, static_cast<std::size_t>(4) * threads,
                                  [&](const NodeCtx& node, bool is_root) {
                                    ++shared_stats.visited;
                                    const double v = static_cast<double>(node.matched.size());
                                    const double u = std::max(node.pos, -node.neg);
                                    if (u + params.radius * std::sqrt(v) < lambda) {
                                      ++shared_stats.pruned;
                                      return false;
                                    }
                                    if (!is_root) {
                                      const double dot = node.pos + node.neg;
                                      const double ub =
                                          std::abs(dot) +
                                          params.radius *
                                              std::sqrt(std::max(0.0, v - v * v / ds.n));
                                      if (ub >= lambda) survivors.push_back(node.seg);
                                    }
                                    return true;
                                  });
  if (static_cast<std::int64_t>(survivors.size()) > cfg.survivor_cap) {
    throw_survivor_cap(cfg.survivor_cap);
  }

  std::vector<NodeCtx> work(std::make_move_iterator(frontier.begin()),
                            std::make_move_iterator(frontier.end()));
  std::vector<RuleSet> out_per(work.size());
  std::vector<ScreenStats> stats_per(work.size());
  std::atomic<std::int64_t> survivor_count{static_cast<std::int64_t>(survivors.size())};
  std::atomic<bool> abort{false};

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::size_t w = 0; w < work.size(); ++w) {
    if (abort.load(std::memory_order_relaxed)) continue;
    // Count against the shared total conservatively: reserve headroom by
    // reporting already-claimed survivors, then claim ours afterwards.
    if (!screen_visit(params, work[w], false, out_per[w], stats_per[w],
                      survivor_count.load(std::memory_order_relaxed))) {
      abort.store(true, std::memory_order_relaxed);
      continue;
    }
    survivor_count.fetch_add(static_cast<std::int64_t>(out_per[w].size()),
                             std::memory_order_relaxed);
    if (survivor_count.load(std::memory_order_relaxed) > cfg.survivor_cap) {
      abort.store(true, std::memory_order_relaxed);
    }
  }
  if (abort.load()) throw_survivor_cap(cfg.survivor_cap);

  for (std::size_t w = 0; w < work.size(); ++w) {
    shared_stats.visited += stats_per[w].visited;
    shared_stats.pruned += stats_per[w].pruned;
    survivors.insert(survivors.end(), out_per[w].begin(), out_per[w].end());
  }
  std::sort(survivors.begin(), survivors.end(),
            [&ds](const RuleSegment& a, const RuleSegment& b) {
              return tree_order_less(a, b, ds.s);
            });
  shared_stats.survivors = survivors.size();
  if (stats) *stats = shared_stats;
  return survivors;
}

namespace {

struct MaxParams {
  const DiscretizedDataset& ds;
  std::span<const double> weights;
  int max_features = -1;
};

void max_visit_serial(const MaxParams& p, const NodeCtx& node, bool is_root, double& best,
                      std::uint64_t& visited) {
  ++visited;
  const double bound = std::max(node.pos, -node.neg);
  if (bound <= best) return;
  if (!is_root) best = std::max(best, std::abs(node.pos + node.neg));
  for_each_child(p.ds, p.weights, p.max_features, node,
                 [&](NodeCtx child) { max_visit_serial(p, child, false, best, visited); });
}

void max_visit_shared(const MaxParams& p, const NodeCtx& node, bool is_root,
                      std::atomic<double>& best, std::uint64_t& visited) {
  ++visited;
  const double bound = std::max(node.pos, -node.neg);
  if (bound <= best.load(std::memory_order_relaxed)) return;
  if (!is_root) atomic_max(best, std::abs(node.pos + node.neg));
  for_each_child(p.ds, p.weights, p.max_features, node, [&](NodeCtx child) {
    max_visit_shared(p, child, false, best, visited);
  });
}

}  // namespace

double max_rule_correlation_serial(const DiscretizedDataset& ds,
                                   std::span<const double> weights, double lower_bound,
                                   const ScreenConfig& cfg, std::uint64_t* visited) {
  MaxParams params{ds, weights, cfg.max_features};
  double best = std::max(lower_bound, 0.0);
  std::uint64_t count = 0;
  max_visit_serial(params, root_ctx(ds, weights), true, best, count);
  if (visited) *visited += count;
  return best;
}

double max_rule_correlation(const DiscretizedDataset& ds, std::span<const double> weights,
                            double lower_bound, const ScreenConfig& cfg,
                            std::uint64_t* visited) {
  const int threads = resolve_threads(cfg.threads);
  if (threads == 1) {
    return max_rule_correlation_serial(ds, weights, lower_bound, cfg, visited);
  }
  MaxParams params{ds, weights, cfg.max_features};
  std::atomic<double> best{std::max(lower_bound, 0.0)};
  std::uint64_t count = 0;
  ScreenParams frontier_params{ds, weights, 0.0, 0.0, cfg.max_features, 0};
  auto frontier = expand_frontier(frontier_params, static_cast<std::size_t>(4) * threads,
                                  [&](const NodeCtx& node, bool is_root) {
                                    ++count;
                                    const double bound = std::max(node.pos, -node.neg);
                                    if (bound <= best.load()) return false;
                                    if (!is_root) {
                                      atomic_max(best, std::abs(node.pos + node.neg));
                                    }
                                    return true;
                                  });
  std::vector<NodeCtx> work(std::make_move_iterator(frontier.begin()),
                            std::make_move_iterator(frontier.end()));
  std::vector<std::uint64_t> count_per(work.size(), 0);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::size_t w = 0; w < work.size(); ++w) {
    max_visit_shared(params, work[w], false, best, count_per[w]);
  }
  for (std::uint64_t c : count_per) count += c;
  if (visited) *visited += count;
  return best.load();
}

RuleMaxFn make_rule_max(const DiscretizedDataset& ds, const ScreenConfig& cfg,
                        std::uint64_t* visited) {
  return [&ds, cfg, visited](std::span<const double> weights, double lower_bound) {
    return max_rule_correlation(ds, weights, lower_bound, cfg, visited);
  };
}

}  // namespace sorf
