#include "sorf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sorf {

namespace {

void enumerate_boxes(std::span<const std::int32_t> s, int max_features, std::size_t cap,
                     RuleSegment& seg, int j, int constrained,
                     std::vector<RuleSegment>& out) {
  if (j == static_cast<int>(s.size())) {
    if (constrained > 0) {  // skip the full segment
      if (out.size() >= cap) {
        throw std::runtime_error("materialize: rule count exceeds the oracle cap");
      }
      out.push_back(seg);
    }
    return;
  }
  for (std::int32_t lo = 0; lo < s[j]; ++lo) {
    for (std::int32_t hi = lo; hi < s[j]; ++hi) {
      const bool constrains = !(lo == 0 && hi == s[j] - 1);
      if (constrains && max_features >= 0 && constrained >= max_features) continue;
      seg.lo[j] = lo;
      seg.hi[j] = hi;
      enumerate_boxes(s, max_features, cap, seg, j + 1, constrained + (constrains ? 1 : 0),
                      out);
    }
  }
  seg.lo[j] = 0;
  seg.hi[j] = s[j] - 1;
}

}  // namespace

DenseInstance materialize(const DiscretizedDataset& ds, const ProblemEncoding& enc,
                          std::size_t cap, int max_features) {
  DenseInstance inst;
  inst.n = ds.n;
  inst.d = enc.d;
  inst.task = enc.task;
  inst.labels = enc.labels;
  inst.rows.resize(ds.n);
  for (int i = 0; i < ds.n; ++i) inst.rows[i] = ds.row(i);

  RuleSegment scratch = full_segment(ds.s);
  enumerate_boxes(ds.s, max_features, cap, scratch, 0, 0, inst.rule_segments);
  std::sort(inst.rule_segments.begin(), inst.rule_segments.end(),
            [&ds](const RuleSegment& a, const RuleSegment& b) {
              return tree_order_less(a, b, ds.s);
            });

  inst.columns.reserve(inst.d + inst.rule_segments.size());
  for (int j = 0; j < inst.d; ++j) {
    auto col = enc.alpha_hat_col(j);
    inst.columns.emplace_back(col.begin(), col.end());
  }
  for (const RuleSegment& seg : inst.rule_segments) {
    std::vector<double> col(inst.n, 0.0);
    for (int i = 0; i < inst.n; ++i) {
      if (evaluate(seg, inst.rows[i])) col[i] = inst.beta(i);
    }
    inst.columns.push_back(std::move(col));
  }
  return inst;
}

namespace {

double oracle_soft(double z, double penalty) {
  if (z > penalty) return z - penalty;
  if (z < -penalty) return z + penalty;
  return 0.0;
}

double oracle_loss_grad(double u, Task task) {
  return task == Task::Regression ? u : -std::max(0.0, 1.0 - u);
}

double oracle_loss(double u, Task task) {
  if (task == Task::Regression) return 0.5 * u * u;
  const double h = std::max(0.0, 1.0 - u);
  return 0.5 * h * h;
}

// Dual candidate from residuals, projected and exhaustively rescaled.
std::vector<double> oracle_dual_point(const DenseInstance& inst,
                                      const std::vector<double>& margin, double rho,
                                      double lambda) {
  const int n = inst.n;
  std::vector<double> theta(n);
  for (int i = 0; i < n; ++i) theta[i] = -oracle_loss_grad(margin[i], inst.task);

  auto project = [&]() {
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += inst.beta(i) * theta[i];
    for (int i = 0; i < n; ++i) theta[i] -= dot / n * inst.beta(i);
  };
  project();
  if (inst.task == Task::Classification) {
    for (int pass = 0; pass < 50; ++pass) {
      double worst = 0.0;
      for (double& t : theta) {
        worst = std::min(worst, t);
        if (t < 0.0) t = 0.0;
      }
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += inst.beta(i) * theta[i];
      if (std::abs(dot) < 1e-12 && worst > -1e-12) break;
      project();
    }
    for (double& t : theta) t = std::max(t, 0.0);
  }

  double scale = 1.0;
  for (std::size_t c = 0; c < inst.columns.size(); ++c) {
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += inst.columns[c][i] * theta[i];
    const double limit = c < static_cast<std::size_t>(inst.d) ? rho : lambda;
    const double mag = std::abs(dot);
    if (mag > limit * (1.0 + 1e-12) + 1e-14) scale = std::min(scale, limit / mag);
  }
  if (scale < 1.0) {
    for (double& t : theta) t *= scale;
  }
  return theta;
}

}  // namespace

OracleSolution brute_solve(const DenseInstance& inst, double rho, double lambda,
                           double tol, int max_sweeps) {
  const int n = inst.n;
  const std::size_t total = inst.columns.size();
  std::vector<double> colsq(total, 0.0);
  for (std::size_t c = 0; c < total; ++c) {
    for (double v : inst.columns[c]) colsq[c] += v * v;
  }

  std::vector<double> coef(total, 0.0);
  double intercept = 0.0;
  std::vector<double> margin(n);
  for (int i = 0; i < n; ++i) margin[i] = inst.gamma(i);

  OracleSolution sol;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    // intercept by bisection on the (monotone) derivative
    {
      double lo = -1e6, hi = 1e6;
      auto deriv = [&](double delta) {
        double g = 0.0;
        for (int i = 0; i < n; ++i) {
          g += inst.beta(i) * oracle_loss_grad(margin[i] + inst.beta(i) * delta, inst.task);
        }
        return g;
      };
      if (deriv(lo) < 0.0 && deriv(hi) > 0.0) {
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          (deriv(mid) < 0.0 ? lo : hi) = mid;
        }
        const double delta = 0.5 * (lo + hi);
        intercept += delta;
        for (int i = 0; i < n; ++i) margin[i] += inst.beta(i) * delta;
      }
    }
    for (std::size_t c = 0; c < total; ++c) {
      if (colsq[c] == 0.0) continue;
      const auto& col = inst.columns[c];
      double g = 0.0;
      for (int i = 0; i < n; ++i) {
        if (col[i] != 0.0) g += col[i] * oracle_loss_grad(margin[i], inst.task);
      }
      const double penalty = c < static_cast<std::size_t>(inst.d) ? rho : lambda;
      const double next = oracle_soft(coef[c] * colsq[c] - g, penalty) / colsq[c];
      const double delta = next - coef[c];
      if (delta != 0.0) {
        coef[c] = next;
        for (int i = 0; i < n; ++i) {
          if (col[i] != 0.0) margin[i] += delta * col[i];
        }
      }
    }
    if (sweep % 10 == 0 || sweep == max_sweeps) {
      sol.theta = oracle_dual_point(inst, margin, rho, lambda);
      sol.primal = 0.0;
      for (int i = 0; i < n; ++i) sol.primal += oracle_loss(margin[i], inst.task);
      for (std::size_t c = 0; c < total; ++c) {
        sol.primal += (c < static_cast<std::size_t>(inst.d) ? rho : lambda) *
                      std::abs(coef[c]);
      }
      sol.dual = 0.0;
      for (int i = 0; i < n; ++i) {
        sol.dual += -0.5 * sol.theta[i] * sol.theta[i] + inst.delta(i) * sol.theta[i];
      }
      sol.gap = sol.primal - sol.dual;
      if (sol.gap <= tol) {
        sol.converged = true;
        break;
      }
    }
  }

  sol.intercept = intercept;
  sol.eta.assign(coef.begin(), coef.begin() + inst.d);
  sol.zeta.assign(coef.begin() + inst.d, coef.end());
  for (std::size_t k = 0; k < sol.zeta.size(); ++k) {
    if (sol.zeta[k] != 0.0) sol.active_rules.push_back(k);
  }
  return sol;
}

double brute_rule_max(const DenseInstance& inst, std::span<const double> weights) {
  double best = 0.0;
  for (const RuleSegment& seg : inst.rule_segments) {
    double sum = 0.0;
    for (int i = 0; i < inst.n; ++i) {
      if (evaluate(seg, inst.rows[i])) sum += weights[i];
    }
    best = std::max(best, std::abs(sum));
  }
  return best;
}

}  // namespace sorf
