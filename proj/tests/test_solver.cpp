#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "sorf/oracle.hpp"
#include "sorf/path.hpp"
#include "sorf/solver.hpp"
#include "sorf/verify.hpp"

using namespace sorf;

namespace {

std::vector<int> all_features(int d) {
  std::vector<int> out(d);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

}  // namespace

TEST_CASE("unpenalized single feature recovers the least squares slope") {
  // centered column, centered labels: slope = x'y / x'x, intercept 0
  std::vector<std::vector<double>> cols{{-1.0, 0.0, 1.0, 2.0, -2.0}};
  std::vector<double> y{-2.1, 0.2, 1.9, 4.2, -4.2};
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  for (double& v : y) v -= mean;
  DiscretizedDataset ds = discretize_interval(cols, 0.0);
  ProblemEncoding enc = ProblemEncoding::make(Task::Regression, cols, y, 0.0, 1.0);

  SolverConfig cfg;
  cfg.gap_tolerance = 1e-9;
  ModelState state =
      solve_restricted(ds, enc, all_features(1), {}, ModelState::zero(1), cfg);
  CHECK(state.converged);
  CHECK(state.gap <= 1e-9);
  double xy = 0.0, xx = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    xy += cols[0][i] * y[i];
    xx += cols[0][i] * cols[0][i];
  }
  CHECK(state.eta[0] == doctest::Approx(xy / xx).epsilon(1e-7));
  CHECK(state.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-7));
}

TEST_CASE("single feature soft-threshold closed form") {
  std::vector<std::vector<double>> cols{{-1.0, 0.0, 1.0}};
  std::vector<double> y{-2.0, 0.0, 2.0};
  DiscretizedDataset ds = discretize_interval(cols, 0.0);
  ProblemEncoding enc = ProblemEncoding::make(Task::Regression, cols, y, 1.0, 1.0);
  SolverConfig cfg;
  cfg.gap_tolerance = 1e-10;
  ModelState state =
      solve_restricted(ds, enc, all_features(1), {}, ModelState::zero(1), cfg);
  // S(x'y, rho)/||x||^2 = (4 - 1)/2
  CHECK(state.eta[0] == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(state.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
}

TEST_CASE("above lambda_max the model is the intercept-only optimum") {
  for (bool classification : {false, true}) {
    SyntheticInstance inst = [&] {
      std::mt19937_64 rng(classification ? 71 : 70);
      InstanceSpec spec;
      spec.classification = classification;
      return make_instance(rng, spec);
    }();
    ProblemEncoding probe = instance_encoding(inst, 1.0, 1.0);
    ScreenConfig scfg;
    const double lmax = lambda_max(inst.ds, probe, scfg);
    const double lambda = lmax * (1.0 + 1e-6);
    ModelState state = pipeline_solve(inst, lambda, 1e-9);
    for (double e : state.eta) CHECK(e == 0.0);
    CHECK(state.rules.empty());
    const InterceptOnly base = intercept_only_optimum(instance_encoding(inst, lambda, lambda));
    CHECK(state.intercept == doctest::Approx(base.intercept).epsilon(1e-6).scale(1.0));
    if (!classification) {
      double mean = 0.0;
      for (double v : inst.labels) mean += v;
      mean /= inst.labels.size();
      CHECK(state.intercept == doctest::Approx(mean).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("primal value never increases across sweeps") {
  for (bool classification : {false, true}) {
    std::mt19937_64 rng(classification ? 73 : 72);
    InstanceSpec spec;
    spec.classification = classification;
    SyntheticInstance inst = make_instance(rng, spec);
    ProblemEncoding probe = instance_encoding(inst, 1.0, 1.0);
    ScreenConfig scfg;
    const double lmax = lambda_max(inst.ds, probe, scfg);
    const double lambda = 0.2 * lmax;
    ProblemEncoding enc = instance_encoding(inst, lambda, lambda);

    // survivors from a cold screen, as the path would provide
    const InterceptOnly base = intercept_only_optimum(enc);
    ModelState pair = ModelState::zero(enc.d);
    pair.intercept = base.intercept;
    pair.theta = base.theta;
    pair.primal = primal_value(pair, enc, inst.ds);
    pair.dual = dual_value(pair.theta, enc);
    RuleSet survivors = screen_rules(inst.ds, sphere(pair, enc), enc, lambda, scfg);

    SolverConfig cfg;
    cfg.dynamic_screening = false;
    double prev = primal_value(pair, enc, inst.ds);
    for (int sweeps = 1; sweeps <= 12; ++sweeps) {
      cfg.max_iterations = sweeps;
      ModelState state = solve_restricted(inst.ds, enc, all_features(enc.d), survivors,
                                          ModelState::zero(enc.d), cfg);
      const double value = primal_value(state, enc, inst.ds);
      CHECK(value <= prev + 1e-10 * std::max(1.0, std::abs(prev)));
      prev = value;
    }
  }
}

TEST_CASE("KKT conditions hold at tight convergence") {
  std::mt19937_64 rng(74);
  std::uniform_real_distribution<double> frac(0.1, 0.8);
  for (int trial = 0; trial < 8; ++trial) {
    InstanceSpec spec;
    spec.classification = trial % 2 == 1;
    spec.n_max = 30;
    SyntheticInstance inst = make_instance(rng, spec);
    ProblemEncoding probe = instance_encoding(inst, 1.0, 1.0);
    ScreenConfig scfg;
    const double lmax = lambda_max(inst.ds, probe, scfg);
    if (lmax <= 0) continue;
    const double lambda = frac(rng) * lmax;
    ProblemEncoding enc = instance_encoding(inst, lambda, lambda);
    ModelState state = pipeline_solve(inst, lambda, 1e-12);
    REQUIRE(state.converged);

    // correlations against the residual-based dual candidate
    std::vector<double> m = margins(state, enc, inst.ds);
    std::vector<double> theta(enc.n);
    for (int i = 0; i < enc.n; ++i) theta[i] = -loss_grad(m[i], enc.task);

    for (int j = 0; j < enc.d; ++j) {
      double dot = 0.0;
      auto col = enc.alpha_hat_col(j);
      for (int i = 0; i < enc.n; ++i) dot += col[i] * theta[i];
      if (state.eta[j] != 0.0) {
        CHECK(std::abs(dot) >= lambda - 1e-4);
        CHECK(std::abs(dot) <= lambda + 1e-4);
        CHECK(dot * state.eta[j] > 0.0);
      } else {
        CHECK(std::abs(dot) <= lambda + 1e-4);
      }
    }
    const DenseInstance dense = materialize(inst.ds, enc);
    for (std::size_t k = 0; k < dense.rule_segments.size(); ++k) {
      double dot = 0.0;
      const auto& col = dense.columns[enc.d + k];
      for (int i = 0; i < enc.n; ++i) dot += col[i] * theta[i];
      auto it = std::find(state.rules.begin(), state.rules.end(), dense.rule_segments[k]);
      if (it != state.rules.end() && state.zeta[it - state.rules.begin()] != 0.0) {
        CHECK(std::abs(dot) >= lambda - 1e-4);
        CHECK(std::abs(dot) <= lambda + 1e-4);
      } else {
        CHECK(std::abs(dot) <= lambda + 1e-4);
      }
    }
  }
}

TEST_CASE("one-dimensional updates are subgradient-optimal against finite differences") {
  std::mt19937_64 rng(75);
  InstanceSpec spec;
  spec.classification = false;
  SyntheticInstance inst = make_instance(rng, spec);
  ProblemEncoding probe = instance_encoding(inst, 1.0, 1.0);
  ScreenConfig scfg;
  const double lambda = 0.3 * lambda_max(inst.ds, probe, scfg);
  ProblemEncoding enc = instance_encoding(inst, lambda, lambda);
  ModelState state = pipeline_solve(inst, lambda, 1e-11);

  const double h = 1e-6;
  auto objective_with = [&](ModelState probe_state) {
    return primal_value(probe_state, enc, inst.ds);
  };
  const double base = objective_with(state);
  for (int j = 0; j < enc.d; ++j) {
    ModelState up = state, down = state;
    up.eta[j] += h;
    down.eta[j] -= h;
    // both one-sided directional derivatives are nonnegative at an optimum
    CHECK((objective_with(up) - base) / h >= -1e-4);
    CHECK((objective_with(down) - base) / h >= -1e-4);
  }
  ModelState up = state, down = state;
  up.intercept += h;
  down.intercept -= h;
  CHECK((objective_with(up) - base) / h >= -1e-4);
  CHECK((objective_with(down) - base) / h >= -1e-4);
}

TEST_CASE("iteration cap returns a flagged non-converged state") {
  std::mt19937_64 rng(76);
  InstanceSpec spec;
  SyntheticInstance inst = make_instance(rng, spec);
  ProblemEncoding probe = instance_encoding(inst, 1.0, 1.0);
  ScreenConfig scfg;
  const double lambda = 0.05 * lambda_max(inst.ds, probe, scfg);
  ProblemEncoding enc = instance_encoding(inst, lambda, lambda);
  SolverConfig cfg;
  cfg.max_iterations = 1;
  cfg.gap_tolerance = 1e-14;
  ModelState state = solve_restricted(inst.ds, enc, all_features(enc.d), {},
                                      ModelState::zero(enc.d), cfg);
  CHECK_FALSE(state.converged);
  CHECK(state.gap > 1e-14);
}

TEST_CASE("reconstruction trims zeros and passes the certificate spot check") {
  std::mt19937_64 rng(77);
  InstanceSpec spec;
  SyntheticInstance inst = make_instance(rng, spec);
  ProblemEncoding probe = instance_encoding(inst, 1.0, 1.0);
  ScreenConfig scfg;
  const double lmax = lambda_max(inst.ds, probe, scfg);
  const double lambda = 0.3 * lmax;
  ProblemEncoding enc = instance_encoding(inst, lambda, lambda);

  ModelState state = pipeline_solve(inst, lambda, 1e-9);
  for (double z : state.zeta) CHECK(z != 0.0);  // already reconstructed by the path

  // empty survivor set: intercept-and-linear-only model survives reconstruction
  SolverConfig cfg;
  ModelState plain = solve_restricted(inst.ds, enc, all_features(enc.d), {},
                                      ModelState::zero(enc.d), cfg);
  ModelState rebuilt = reconstruct_full(plain, inst.ds, enc, cfg);
  CHECK(rebuilt.rules.empty());
  CHECK(rebuilt.converged);
}

TEST_CASE("gap certificates remain honest under dynamic screening") {
  // reported gap must upper-bound the true suboptimality
  std::mt19937_64 rng(78);
  std::uniform_real_distribution<double> frac(0.05, 0.9);
  for (int trial = 0; trial < 6; ++trial) {
    InstanceSpec spec;
    spec.classification = trial % 2 == 1;
    spec.n_max = 25;
    SyntheticInstance inst = make_instance(rng, spec);
    ProblemEncoding probe = instance_encoding(inst, 1.0, 1.0);
    ScreenConfig scfg;
    const double lmax = lambda_max(inst.ds, probe, scfg);
    if (lmax <= 0) continue;
    const double lambda = frac(rng) * lmax;
    ProblemEncoding enc = instance_encoding(inst, lambda, lambda);
    const DenseInstance dense = materialize(inst.ds, enc);
    const OracleSolution oracle = brute_solve(dense, lambda, lambda, 1e-12);

    ModelState state = pipeline_solve(inst, lambda, 1e-8);
    const double primal = primal_value(state, enc, inst.ds);
    CHECK(primal - oracle.primal <= state.gap + 1e-9);
  }
}
