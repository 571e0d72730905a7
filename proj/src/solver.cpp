#include "sorf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace sorf {

namespace {

double soft_threshold(double z, double penalty) {
  if (z > penalty) return z - penalty;
  if (z < -penalty) return z + penalty;
  return 0.0;
}

double squared_intercept_step(std::span<const double> margin, const ProblemEncoding& enc) {
  double dot = 0.0;
  for (int i = 0; i < enc.n; ++i) dot += enc.beta(i) * margin[i];
  return -dot / enc.n;
}

// Exact minimizer of sum_i 0.5*max(0, 1 - m_i - beta_i*delta)^2 over delta.
// The derivative is continuous, piecewise linear and nondecreasing with
// breakpoints beta_i*(1 - m_i); every active term contributes -bp to the
// constant part and 1 to the slope.
double hinge_intercept_step(std::span<const double> margin, const ProblemEncoding& enc) {
  const int n = enc.n;
  std::vector<std::pair<double, double>> bps(n);  // (breakpoint, beta)
  double a = 0.0;
  double b = 0.0;
  for (int i = 0; i < n; ++i) {
    const double beta = enc.beta(i);
    const double bp = beta * (1.0 - margin[i]);
    bps[i] = {bp, beta};
    if (beta > 0.0) {  // active at delta -> -inf
      a -= bp;
      b += 1.0;
    }
  }
  std::sort(bps.begin(), bps.end());
  bool first_segment = true;
  double prev = 0.0;
  for (const auto& [bp, beta] : bps) {
    if (a + b * bp >= 0.0) {            // derivative crosses zero in this segment
      if (b > 0.0) return -a / b;
      return first_segment ? bp : prev;  // flat segment, pick its start
    }
    if (beta > 0.0) {  // positive sample leaves the active set
      a += bp;
      b -= 1.0;
    } else {  // negative sample enters
      a -= bp;
      b += 1.0;
    }
    prev = bp;
    first_segment = false;
  }
  if (b > 0.0) return -a / b;
  return first_segment ? 0.0 : prev;  // all hinges satisfied beyond the last breakpoint
}

}  // namespace

double exact_intercept_step(std::span<const double> margin, const ProblemEncoding& enc) {
  return enc.task == Task::Regression ? squared_intercept_step(margin, enc)
                                      : hinge_intercept_step(margin, enc);
}

namespace {

struct ActiveRule {
  RuleSegment seg;
  std::vector<std::int32_t> matched;
  double inv_l = 0.0;  // 1 / matched count
  double coef = 0.0;
  bool alive = true;
};

struct ActiveLinear {
  int j = 0;
  double l = 0.0;  // squared column norm
  double coef = 0.0;
  bool alive = true;
};

std::vector<std::int32_t> matched_samples(const RuleSegment& seg,
                                          const DiscretizedDataset& ds) {
  std::vector<std::int32_t> matched;
  for (int i = 0; i < ds.n; ++i) {
    bool hit = true;
    for (int j = 0; j < ds.d; ++j) {
      const std::int32_t v = ds.levels[j][i];
      if (v < seg.lo[j] || v > seg.hi[j]) {
        hit = false;
        break;
      }
    }
    if (hit) matched.push_back(i);
  }
  return matched;
}

}  // namespace

ModelState solve_restricted(const DiscretizedDataset& ds, const ProblemEncoding& enc,
                            const std::vector<int>& active_linear,
                            const RuleSet& active_rules, const ModelState& warm,
                            const SolverConfig& cfg, SolveStats* stats_out) {
  const int n = enc.n;
  SolveStats stats;

  std::vector<ActiveLinear> linear;
  linear.reserve(active_linear.size());
  for (int j : active_linear) {
    ActiveLinear al;
    al.j = j;
    auto col = enc.alpha_hat_col(j);
    for (int i = 0; i < n; ++i) al.l += col[i] * col[i];
    if (j < static_cast<int>(warm.eta.size())) al.coef = warm.eta[j];
    linear.push_back(al);
  }

  std::vector<ActiveRule> rules;
  rules.reserve(active_rules.size());
  for (const RuleSegment& seg : active_rules) {
    ActiveRule ar;
    ar.seg = seg;
    ar.matched = matched_samples(seg, ds);
    if (!ar.matched.empty()) ar.inv_l = 1.0 / static_cast<double>(ar.matched.size());
    auto it = std::find(warm.rules.begin(), warm.rules.end(), seg);
    if (it != warm.rules.end()) ar.coef = warm.zeta[it - warm.rules.begin()];
    if (ar.matched.empty()) ar.coef = 0.0;  // zero column, penalized optimum is 0
    rules.push_back(std::move(ar));
  }

  double intercept = warm.intercept;

  // Margins maintained incrementally; recomputed on a cadence to cap drift.
  std::vector<double> margin(n);
  auto recompute_margins = [&]() {
    for (int i = 0; i < n; ++i) margin[i] = enc.beta(i) * intercept + enc.gamma(i);
    for (const auto& al : linear) {
      if (al.coef == 0.0) continue;
      auto col = enc.alpha_hat_col(al.j);
      for (int i = 0; i < n; ++i) margin[i] += al.coef * col[i];
    }
    for (const auto& ar : rules) {
      if (ar.coef == 0.0) continue;
      for (std::int32_t i : ar.matched) margin[i] += enc.beta(i) * ar.coef;
    }
  };
  recompute_margins();
  int sweeps_since_recompute = 0;

  ScreenConfig tree_cfg;
  tree_cfg.max_features = cfg.max_features;
  tree_cfg.threads = cfg.threads;
  tree_cfg.survivor_cap = cfg.survivor_cap;
  const RuleMaxFn rule_max = make_rule_max(ds, tree_cfg, &stats.tree_nodes_visited);

  auto sweep = [&]() {
    const double db = exact_intercept_step(margin, enc);
    if (db != 0.0) {
      intercept += db;
      for (int i = 0; i < n; ++i) margin[i] += enc.beta(i) * db;
    }
    for (auto& al : linear) {
      if (!al.alive || al.l == 0.0) continue;
      auto col = enc.alpha_hat_col(al.j);
      double g = 0.0;
      for (int i = 0; i < n; ++i) g += col[i] * loss_grad(margin[i], enc.task);
      const double next = soft_threshold(al.coef * al.l - g, enc.rho) / al.l;
      const double delta = next - al.coef;
      if (delta != 0.0) {
        al.coef = next;
        for (int i = 0; i < n; ++i) margin[i] += delta * col[i];
      }
    }
    for (auto& ar : rules) {
      if (!ar.alive || ar.matched.empty()) continue;
      double g = 0.0;
      for (std::int32_t i : ar.matched) g += enc.beta(i) * loss_grad(margin[i], enc.task);
      const double l = 1.0 / ar.inv_l;
      const double next = soft_threshold(ar.coef * l - g, enc.lambda) * ar.inv_l;
      const double delta = next - ar.coef;
      if (delta != 0.0) {
        ar.coef = next;
        for (std::int32_t i : ar.matched) margin[i] += enc.beta(i) * delta;
      }
    }
  };

  std::vector<double> theta;
  double primal = 0.0, dual = 0.0, gap = std::numeric_limits<double>::infinity();

  auto evaluate_gap = [&]() {
    if (sweeps_since_recompute >= cfg.recompute_margins_every) {
      recompute_margins();
      sweeps_since_recompute = 0;
    }
    theta = dual_point_from_margins(margin, enc, rule_max);
    primal = 0.0;
    for (int i = 0; i < n; ++i) primal += loss_value(margin[i], enc.task);
    for (const auto& al : linear) primal += enc.rho * std::abs(al.coef);
    for (const auto& ar : rules) primal += enc.lambda * std::abs(ar.coef);
    dual = dual_value(theta, enc);
    gap = primal - dual;
    ++stats.gap_checks;
    stats.radius_trace.push_back(std::sqrt(2.0 * std::max(0.0, gap)));
  };

  auto dynamic_screen = [&]() {
    const double radius = std::sqrt(2.0 * std::max(0.0, gap));
    for (auto& al : linear) {
      if (!al.alive) continue;
      auto col = enc.alpha_hat_col(al.j);
      double dot = 0.0, bdot = 0.0;
      for (int i = 0; i < n; ++i) {
        dot += col[i] * theta[i];
        bdot += col[i] * enc.beta(i);
      }
      const double ub =
          std::abs(dot) + radius * std::sqrt(std::max(0.0, al.l - bdot * bdot / n));
      if (ub < enc.rho) {
        if (al.coef != 0.0) {
          for (int i = 0; i < n; ++i) margin[i] -= al.coef * col[i];
          al.coef = 0.0;
        }
        al.alive = false;
        ++stats.dropped_features;
      }
    }
    for (auto& ar : rules) {
      if (!ar.alive) continue;
      double dot = 0.0;
      for (std::int32_t i : ar.matched) dot += enc.beta(i) * theta[i];
      const double v = static_cast<double>(ar.matched.size());
      const double ub = std::abs(dot) + radius * std::sqrt(std::max(0.0, v - v * v / n));
      if (ub < enc.lambda) {
        if (ar.coef != 0.0) {
          for (std::int32_t i : ar.matched) margin[i] -= enc.beta(i) * ar.coef;
          ar.coef = 0.0;
        }
        ar.alive = false;
        ++stats.dropped_rules;
      }
    }
  };

  bool converged = false;
  int iter = 0;
  for (iter = 1; iter <= cfg.max_iterations; ++iter) {
    sweep();
    ++sweeps_since_recompute;
    ++stats.sweeps;
    if (iter % cfg.screen_every == 0 || iter == cfg.max_iterations) {
      evaluate_gap();
      if (gap <= cfg.gap_tolerance) {
        converged = true;
        break;
      }
      if (cfg.dynamic_screening) dynamic_screen();
    }
  }
  if (stats.gap_checks == 0) evaluate_gap();

  ModelState state;
  state.eta.assign(enc.d, 0.0);
  for (const auto& al : linear) state.eta[al.j] = al.coef;
  for (const auto& ar : rules) {
    if (!ar.alive) continue;
    state.rules.push_back(ar.seg);
    state.zeta.push_back(ar.coef);
  }
  state.intercept = intercept;
  state.theta = std::move(theta);
  state.primal = primal;
  state.dual = dual;
  state.gap = gap;
  state.converged = converged;
  state.iterations = iter;
  if (stats_out) *stats_out = stats;
  return state;
}

ModelState reconstruct_full(ModelState state, const DiscretizedDataset& ds,
                            const ProblemEncoding& enc, const SolverConfig& cfg,
                            std::uint64_t spot_check_seed, int spot_checks) {
  RuleSet kept;
  std::vector<double> coefs;
  for (std::size_t k = 0; k < state.rules.size(); ++k) {
    if (state.zeta[k] == 0.0) continue;
    kept.push_back(state.rules[k]);
    coefs.push_back(state.zeta[k]);
  }

  // Unlisted rules are zero by construction; verify the certificate on a
  // random sample of them. The optimal dual correlation is at most lambda,
  // and theta sits within the gap sphere of the optimum, so each sampled
  // correlation must stay below lambda plus the sphere term.
  if (spot_checks > 0 && !state.theta.empty()) {
    std::mt19937_64 rng(spot_check_seed);
    const double radius = std::sqrt(2.0 * std::max(0.0, state.gap));
    for (int trial = 0; trial < spot_checks; ++trial) {
      RuleSegment seg;
      seg.lo.resize(ds.d);
      seg.hi.resize(ds.d);
      for (int j = 0; j < ds.d; ++j) {
        std::uniform_int_distribution<std::int32_t> pick(0, ds.s[j] - 1);
        std::int32_t a = pick(rng), b = pick(rng);
        seg.lo[j] = std::min(a, b);
        seg.hi[j] = std::max(a, b);
      }
      if (is_full_segment(seg, ds.s)) continue;
      if (cfg.max_features >= 0 &&
          constrained_feature_count(seg, ds.s) > cfg.max_features) {
        continue;
      }
      if (std::find(state.rules.begin(), state.rules.end(), seg) != state.rules.end()) {
        continue;
      }
      double dot = 0.0, v = 0.0;
      for (int i = 0; i < enc.n; ++i) {
        if (!evaluate(seg, ds.row(i))) continue;
        dot += enc.beta(i) * state.theta[i];
        v += 1.0;
      }
      const double allowance =
          enc.lambda + radius * std::sqrt(v) + 1e-9 * std::max(1.0, enc.lambda);
      if (std::abs(dot) > allowance) {
        throw std::runtime_error(
            "reconstruct_full: screened rule violates the dual certificate");
      }
    }
  }

  state.rules = std::move(kept);
  state.zeta = std::move(coefs);
  return state;
}

}  // namespace sorf
