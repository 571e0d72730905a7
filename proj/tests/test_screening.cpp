#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "sorf/oracle.hpp"
#include "sorf/path.hpp"
#include "sorf/screening.hpp"
#include "sorf/solver.hpp"
#include "sorf/tree.hpp"
#include "sorf/verify.hpp"

using namespace sorf;

namespace {

SyntheticInstance tiny(std::uint64_t seed, bool classification) {
  std::mt19937_64 rng(seed);
  InstanceSpec spec;
  spec.n_min = 8;
  spec.n_max = 30;
  spec.classification = classification;
  return make_instance(rng, spec);
}

// random dual-feasible center with mixed signs of beta_i * theta_i
std::vector<double> random_center(const ProblemEncoding& enc, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> theta(enc.n);
  for (double& t : theta) t = normal(rng);
  if (enc.task == Task::Classification) {
    for (double& t : theta) t = std::abs(t);
  }
  double dot = 0.0;
  for (int i = 0; i < enc.n; ++i) dot += enc.beta(i) * theta[i];
  for (int i = 0; i < enc.n; ++i) theta[i] -= dot / enc.n * enc.beta(i);
  if (enc.task == Task::Classification) {
    for (int pass = 0; pass < 50; ++pass) {
      for (double& t : theta) t = std::max(t, 0.0);
      dot = 0.0;
      for (int i = 0; i < enc.n; ++i) dot += enc.beta(i) * theta[i];
      if (std::abs(dot) < 1e-12) break;
      for (int i = 0; i < enc.n; ++i) theta[i] -= dot / enc.n * enc.beta(i);
    }
    for (double& t : theta) t = std::max(t, 0.0);
  }
  return theta;
}

}  // namespace

TEST_CASE("sphere radius is the square root of twice the gap") {
  SyntheticInstance inst = tiny(51, false);
  ProblemEncoding enc = instance_encoding(inst, 1.0, 1.0);
  ModelState state = ModelState::zero(enc.d);
  state.theta.assign(enc.n, 0.0);
  state.primal = primal_value(state, enc, inst.ds);
  state.dual = 0.0;
  SafeSphere sp = sphere(state, enc);
  double norm = 0.0;
  for (double y : inst.labels) norm += y * y;
  CHECK(sp.radius == doctest::Approx(std::sqrt(norm)).epsilon(1e-12));

  state.dual = state.primal + 1e-9;  // numerically negative gap clamps to zero
  CHECK(sphere(state, enc).radius == 0.0);
}

TEST_CASE("linear upper bound: exact at radius zero, projection kills parallel columns") {
  // three samples, hand numbers
  ProblemEncoding enc = ProblemEncoding::make(
      Task::Regression, {{1.0, 2.0, -1.0}, {1.0, 1.0, 1.0}}, {0.5, -0.5, 1.0}, 1.0, 1.0);
  SafeSphere sp;
  sp.center = {0.25, -0.5, 0.75};
  sp.radius = 0.0;
  // dot = 0.25 - 1.0 - 0.75 = -1.5
  CHECK(ub_linear(0, sp, enc) == doctest::Approx(1.5).epsilon(1e-12));

  sp.radius = 2.0;
  // column 1 is all ones = beta: the projected direction vanishes
  const double dot1 = 0.25 - 0.5 + 0.75;
  CHECK(ub_linear(1, sp, enc) == doctest::Approx(std::abs(dot1)).epsilon(1e-12));

  // column 0 by the closed form: |dot| + r*sqrt(||col||^2 - (col'beta)^2/n)
  const double expect = 1.5 + 2.0 * std::sqrt(6.0 - 4.0 / 3.0);
  CHECK(ub_linear(0, sp, enc) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("rule upper bound equals the linear bound on the explicit column") {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 10; ++trial) {
    SyntheticInstance inst = tiny(300 + trial, trial % 2 == 1);
    ProblemEncoding enc = instance_encoding(inst, 1.0, 1.0);
    SafeSphere sp;
    sp.center = random_center(enc, rng);
    sp.radius = 0.5;

    // pick a random valid segment
    RuleSegment seg;
    seg.lo.resize(inst.ds.d);
    seg.hi.resize(inst.ds.d);
    for (int j = 0; j < inst.ds.d; ++j) {
      std::uniform_int_distribution<std::int32_t> level(0, inst.ds.s[j] - 1);
      std::int32_t a = level(rng), b = level(rng);
      seg.lo[j] = std::min(a, b);
      seg.hi[j] = std::max(a, b);
    }

    // explicit rule column appended as a linear feature
    std::vector<double> column(enc.n, 0.0);
    double v = 0.0;
    for (int i = 0; i < enc.n; ++i) {
      if (evaluate(seg, inst.ds.row(i))) {
        column[i] = 1.0;  // make() multiplies by the label for classification
        v += 1.0;
      }
    }
    std::vector<std::vector<double>> cols = inst.columns;
    cols.push_back(column);
    ProblemEncoding wide = ProblemEncoding::make(enc.task, cols, inst.labels, 1.0, 1.0);
    CHECK(ub_rule(seg, sp, enc, inst.ds) ==
          doctest::Approx(ub_linear(enc.d, sp, wide)).epsilon(1e-12));

    // rule matching nothing bounds to zero
    if (v == 0.0) CHECK(ub_rule(seg, sp, enc, inst.ds) == 0.0);
  }
}

TEST_CASE("subtree bound: empty support prunes, one-sided sums at radius zero") {
  SyntheticInstance inst = tiny(53, false);
  ProblemEncoding enc = instance_encoding(inst, 1.0, 1.0);
  TreeNode node;
  node.seg = full_segment(inst.ds.s);
  node.matched = {};
  SafeSphere sp;
  sp.center.assign(enc.n, 0.5);
  sp.radius = 3.0;
  SubtreeBound empty = srpc_bound(node, sp, enc);
  CHECK(empty.srpc == 0.0);
  CHECK(empty.v == 0.0);

  // all weights positive on the matched set: srpc equals their sum
  node.matched = {0, 1, 2};
  sp.radius = 0.0;
  SubtreeBound one_sided = srpc_bound(node, sp, enc);
  CHECK(one_sided.u == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(one_sided.srpc == one_sided.u);
}

TEST_CASE("subtree bound dominates every descendant's upper bound") {
  std::mt19937_64 rng(54);
  for (int trial = 0; trial < 8; ++trial) {
    SyntheticInstance inst = tiny(400 + trial, trial % 2 == 1);
    ProblemEncoding enc = instance_encoding(inst, 1.0, 1.0);
    SafeSphere sp;
    sp.center = random_center(enc, rng);
    sp.radius = std::uniform_real_distribution<double>(0.0, 2.0)(rng);

    const std::function<void(const TreeNode&, double)> walk = [&](const TreeNode& node,
                                                                  double ancestor_srpc) {
      const double own = srpc_bound(node, sp, enc).srpc;
      if (!is_full_segment(node.seg, inst.ds.s)) {
        CHECK(ub_rule(node.seg, sp, enc, inst.ds) <= ancestor_srpc + 1e-12);
        CHECK(ub_rule(node.seg, sp, enc, inst.ds) <= own + 1e-12);
      }
      for (const TreeNode& child : tree_children(node, inst.ds)) {
        walk(child, std::min(ancestor_srpc, own));
      }
    };
    walk(tree_root(inst.ds), std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("subtree bound is monotone along every tree edge") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    SyntheticInstance inst = tiny(500 + trial, trial % 2 == 1);
    ProblemEncoding enc = instance_encoding(inst, 1.0, 1.0);
    SafeSphere sp;
    sp.center = random_center(enc, rng);
    sp.radius = std::uniform_real_distribution<double>(0.0, 1.5)(rng);

    bool mixed_pos = false, mixed_neg = false;
    for (int i = 0; i < enc.n; ++i) {
      const double w = enc.beta(i) * sp.center[i];
      mixed_pos |= w > 0;
      mixed_neg |= w < 0;
    }
    CHECK(mixed_pos);
    CHECK(mixed_neg);

    const std::function<void(const TreeNode&)> walk = [&](const TreeNode& node) {
      const double parent = srpc_bound(node, sp, enc).srpc;
      for (const TreeNode& child : tree_children(node, inst.ds)) {
        CHECK(srpc_bound(child, sp, enc).srpc <= parent + 1e-12);
        walk(child);
      }
    };
    walk(tree_root(inst.ds));
  }
}

TEST_CASE("bounds shrink pointwise with the radius") {
  std::mt19937_64 rng(56);
  SyntheticInstance inst = tiny(57, false);
  ProblemEncoding enc = instance_encoding(inst, 1.0, 1.0);
  SafeSphere small, large;
  small.center = large.center = random_center(enc, rng);
  small.radius = 0.3;
  large.radius = 1.7;
  enumerate_all(inst.ds, -1, [&](const TreeNode& node) {
    CHECK(srpc_bound(node, small, enc).srpc <= srpc_bound(node, large, enc).srpc + 1e-15);
    if (!is_full_segment(node.seg, inst.ds.s)) {
      CHECK(ub_rule(node.seg, small, enc, inst.ds) <=
            ub_rule(node.seg, large, enc, inst.ds) + 1e-15);
    }
  });
  for (int j = 0; j < enc.d; ++j) {
    CHECK(ub_linear(j, small, enc) <= ub_linear(j, large, enc) + 1e-15);
  }
}

TEST_CASE("screening keeps the zero-penalty survivor set empty above lambda_max") {
  for (int trial = 0; trial < 6; ++trial) {
    SyntheticInstance inst = tiny(600 + trial, trial % 2 == 1);
    ProblemEncoding probe = instance_encoding(inst, 1.0, 1.0);
    ScreenConfig cfg;
    const double lmax = lambda_max(inst.ds, probe, cfg);
    if (lmax <= 0.0) continue;
    const double lambda = lmax * 1.01;
    ProblemEncoding enc = instance_encoding(inst, lambda, lambda);

    const InterceptOnly base = intercept_only_optimum(enc);
    ModelState state = ModelState::zero(enc.d);
    state.intercept = base.intercept;
    state.theta = base.theta;
    state.primal = primal_value(state, enc, inst.ds);
    state.dual = dual_value(state.theta, enc);

    RuleSet survivors = screen_rules(inst.ds, sphere(state, enc), enc, lambda, cfg);
    CHECK(survivors.empty());
    CHECK(screen_linear(state, enc).size() == static_cast<std::size_t>(enc.d));
  }
}

TEST_CASE("a huge radius defeats pruning and trips the survivor cap") {
  // full factorial grid: every box holds a sample, so nothing has empty support
  std::vector<std::vector<double>> cols(2, std::vector<double>(9));
  std::vector<double> labels(9);
  for (int i = 0; i < 9; ++i) {
    cols[0][i] = i / 3;
    cols[1][i] = i % 3;
    labels[i] = (i % 2 == 0) ? 1.0 : -1.0;
  }
  DiscretizedDataset ds = discretize_interval(cols, 0.0);
  ProblemEncoding enc = ProblemEncoding::make(Task::Regression, cols, labels, 0.01, 0.01);
  SafeSphere sp;
  sp.center.assign(enc.n, 0.0);
  sp.radius = 1e6;

  ScreenConfig cfg;
  ScreenStats stats;
  RuleSet all = screen_rules(ds, sp, enc, 0.01, cfg, &stats);
  CHECK(static_cast<double>(stats.visited) == count_all_segments(ds.s).to_double());
  CHECK(static_cast<double>(all.size()) == count_all_rules(ds.s).to_double());

  ScreenConfig capped = cfg;
  capped.survivor_cap = 3;
  CHECK_THROWS_AS(screen_rules(ds, sp, enc, 0.01, capped), std::runtime_error);
}

TEST_CASE("screening safety against the oracle active set") {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> frac(0.05, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    SyntheticInstance inst = tiny(700 + trial, trial % 2 == 1);
    ProblemEncoding probe = instance_encoding(inst, 1.0, 1.0);
    ScreenConfig cfg;
    const double lmax = lambda_max(inst.ds, probe, cfg);
    if (lmax <= 0.0) continue;
    CheckResult result = check_screening_safety(inst, frac(rng) * lmax);
    CHECK_MESSAGE(result.pass, result.detail);
  }
}

TEST_CASE("parallel kernels agree with the serial reference") {
  std::mt19937_64 rng(60);
  for (int trial = 0; trial < 10; ++trial) {
    SyntheticInstance inst = tiny(800 + trial, trial % 2 == 1);
    ProblemEncoding enc = instance_encoding(inst, 1.0, 1.0);
    std::vector<double> weights(enc.n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& w : weights) w = normal(rng);

    ScreenConfig serial_cfg;
    serial_cfg.threads = 1;
    ScreenConfig parallel_cfg;
    parallel_cfg.threads = 0;

    CHECK(max_rule_correlation_serial(inst.ds, weights, 0.0, serial_cfg) ==
          max_rule_correlation(inst.ds, weights, 0.0, parallel_cfg));

    SafeSphere sp;
    sp.center = random_center(enc, rng);
    sp.radius = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double lambda = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
    CHECK(screen_rules_serial(inst.ds, sp, enc, lambda, serial_cfg) ==
          screen_rules(inst.ds, sp, enc, lambda, parallel_cfg));
  }
}

TEST_CASE("serial survivors come back in tree preorder") {
  SyntheticInstance inst = tiny(61, false);
  ProblemEncoding enc = instance_encoding(inst, 0.05, 0.05);
  SafeSphere sp;
  sp.center.assign(enc.n, 0.0);
  sp.radius = 10.0;
  ScreenConfig cfg;
  RuleSet survivors = screen_rules_serial(inst.ds, sp, enc, 0.05, cfg);
  for (std::size_t k = 0; k + 1 < survivors.size(); ++k) {
    CHECK(tree_order_less(survivors[k], survivors[k + 1], inst.ds.s));
  }
}
