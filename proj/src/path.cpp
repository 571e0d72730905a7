#include "sorf/path.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sorf {

InterceptOnly intercept_only_optimum(const ProblemEncoding& enc) {
  InterceptOnly result;
  std::vector<double> margin(enc.n);
  for (int i = 0; i < enc.n; ++i) margin[i] = enc.gamma(i);
  result.intercept = exact_intercept_step(margin, enc);
  result.theta.resize(enc.n);
  for (int i = 0; i < enc.n; ++i) {
    result.theta[i] = -loss_grad(enc.beta(i) * result.intercept + enc.gamma(i), enc.task);
  }
  return result;
}

double lambda_max(const DiscretizedDataset& ds, const ProblemEncoding& enc,
                  const ScreenConfig& cfg, std::uint64_t* visited) {
  const InterceptOnly base = intercept_only_optimum(enc);
  double feature_term = 0.0;
  for (int j = 0; j < enc.d; ++j) {
    auto col = enc.alpha_hat_col(j);
    double dot = 0.0;
    for (int i = 0; i < enc.n; ++i) dot += col[i] * base.theta[i];
    feature_term = std::max(feature_term, std::abs(dot));
  }
  std::vector<double> weights(enc.n);
  for (int i = 0; i < enc.n; ++i) weights[i] = enc.beta(i) * base.theta[i];
  const double rule_term = max_rule_correlation(ds, weights, 0.0, cfg, visited);
  return std::max(feature_term, rule_term);
}

namespace {

ModelState lambda_max_state(const DiscretizedDataset& ds, const ProblemEncoding& enc) {
  const InterceptOnly base = intercept_only_optimum(enc);
  ModelState state = ModelState::zero(enc.d);
  state.intercept = base.intercept;
  state.theta = base.theta;
  state.primal = primal_value(state, enc, ds);
  state.dual = dual_value(state.theta, enc);
  state.gap = std::max(0.0, state.primal - state.dual);
  state.converged = true;
  return state;
}

std::size_t count_active_rules(const ModelState& state) {
  std::size_t count = 0;
  for (double z : state.zeta) {
    if (z != 0.0) ++count;
  }
  return count;
}

}  // namespace

PathResult run_path(const DiscretizedDataset& ds, const ProblemEncoding& enc_base,
                    const PathConfig& pcfg, const SolverConfig& scfg) {
  using clock = std::chrono::steady_clock;
  if (pcfg.steps < 0) throw std::invalid_argument("run_path: negative step count");

  ScreenConfig tree_cfg;
  tree_cfg.max_features = pcfg.max_features;
  tree_cfg.threads = scfg.threads;
  tree_cfg.survivor_cap = scfg.survivor_cap;

  SolverConfig step_cfg = scfg;
  step_cfg.max_features = pcfg.max_features;

  PathResult result;
  ProblemEncoding enc = enc_base;

  result.lambda_max = lambda_max(ds, enc, tree_cfg, &result.lambda_max_nodes);

  enc.lambda = result.lambda_max;
  enc.rho = pcfg.tie_rho ? result.lambda_max : pcfg.fixed_rho;
  ModelState prev = lambda_max_state(ds, enc);

  const auto run_step = [&](double lambda) {
    const auto start = clock::now();
    enc.lambda = lambda;
    enc.rho = pcfg.tie_rho ? lambda : pcfg.fixed_rho;

    PathStep step;
    step.lambda = lambda;
    step.rho = enc.rho;

    std::uint64_t certificate_nodes = 0;
    const RuleMaxFn rule_max = make_rule_max(ds, tree_cfg, &certificate_nodes);

    // Previous solution re-projected and re-scaled for the new penalties.
    ModelState feasible = prev;
    feasible.theta = dual_feasible_point(prev, enc, ds, rule_max);
    feasible.primal = primal_value(prev, enc, ds);
    feasible.dual = dual_value(feasible.theta, enc);
    feasible.gap = feasible.primal - feasible.dual;

    SafeSphere sp = sphere(feasible, enc);
    ScreenStats screen_stats;
    RuleSet survivors = screen_rules(ds, sp, enc, lambda, tree_cfg, &screen_stats);
    std::vector<int> active_linear;
    for (int j = 0; j < enc.d; ++j) {
      if (ub_linear(j, sp, enc) >= enc.rho) active_linear.push_back(j);
    }

    SolveStats solve_stats;
    ModelState solved =
        solve_restricted(ds, enc, active_linear, survivors, prev, step_cfg, &solve_stats);
    prev = solved;

    step.survivors = survivors.size();
    step.model = reconstruct_full(std::move(solved), ds, enc, step_cfg);
    step.active_rules = count_active_rules(step.model);
    step.screen_nodes = screen_stats.visited;
    step.total_nodes =
        screen_stats.visited + certificate_nodes + solve_stats.tree_nodes_visited;
    step.sweeps = solve_stats.sweeps;
    step.converged = step.model.converged;
    step.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    result.steps.push_back(std::move(step));
  };

  if (!pcfg.explicit_grid.empty()) {
    // Externally pinned grid (cross-validation folds share the full-data
    // grid); every value goes through the regular screen-and-solve step.
    for (double lambda : pcfg.explicit_grid) {
      if (!(lambda > 0.0)) throw std::invalid_argument("run_path: grid values must be > 0");
      run_step(lambda);
    }
    return result;
  }

  if (pcfg.tie_rho) {
    // Strong duality of the intercept-only problem: the zero model is the
    // optimum at lambda_max, no solve needed.
    PathStep first;
    first.lambda = result.lambda_max;
    first.rho = enc.rho;
    first.model = prev;
    result.steps.push_back(std::move(first));
  } else {
    run_step(result.lambda_max);
  }

  if (result.lambda_max <= 0.0) return result;  // constant labels: nothing to trade off

  const double lambda_end =
      pcfg.lambda_end > 0.0 ? pcfg.lambda_end : result.lambda_max * pcfg.lambda_min_ratio;
  if (pcfg.steps == 0) return result;
  if (!(lambda_end > 0.0)) {
    throw std::invalid_argument("run_path: lambda grid end must be positive");
  }
  if (lambda_end >= result.lambda_max) {
    // at or above lambda_max a single step settles it
    run_step(lambda_end);
    return result;
  }
  const double ratio =
      std::pow(lambda_end / result.lambda_max, 1.0 / static_cast<double>(pcfg.steps));

  for (int t = 1; t <= pcfg.steps; ++t) {
    run_step(t == pcfg.steps ? lambda_end : result.lambda_max * std::pow(ratio, t));
    if (pcfg.stop_at_active_rules >= 0 &&
        static_cast<int>(result.steps.back().active_rules) >= pcfg.stop_at_active_rules) {
      break;
    }
  }
  return result;
}

std::size_t select_model(const PathResult& path, const SelectCriterion& criterion,
                         std::span<const double> cv_scores) {
  if (path.steps.empty()) throw std::invalid_argument("select_model: empty path");
  switch (criterion.kind) {
    case SelectKind::FixedLambda: {
      std::size_t best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < path.steps.size(); ++t) {
        const double dist = std::abs(path.steps[t].lambda - criterion.lambda);
        if (dist < best_dist) {
          best_dist = dist;
          best = t;
        }
      }
      return best;
    }
    case SelectKind::ActiveRuleCount: {
      std::size_t best = 0;
      long long best_dist = std::numeric_limits<long long>::max();
      for (std::size_t t = 0; t < path.steps.size(); ++t) {
        const long long dist =
            std::llabs(static_cast<long long>(path.steps[t].active_rules) -
                       static_cast<long long>(criterion.count));
        if (dist < best_dist) {  // ties keep the earlier (larger lambda) step
          best_dist = dist;
          best = t;
        }
      }
      return best;
    }
    case SelectKind::CrossValidation: {
      if (cv_scores.size() != path.steps.size()) {
        throw std::invalid_argument("select_model: need one CV score per path step");
      }
      std::size_t best = 0;
      for (std::size_t t = 1; t < cv_scores.size(); ++t) {
        if (cv_scores[t] < cv_scores[best]) best = t;
      }
      return best;
    }
  }
  throw std::logic_error("select_model: unknown criterion");
}

}  // namespace sorf
