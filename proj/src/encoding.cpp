#include "sorf/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sorf {

double loss_value(double u, Task task) {
  if (task == Task::Regression) return 0.5 * u * u;
  double h = std::max(0.0, 1.0 - u);
  return 0.5 * h * h;
}

double loss_grad(double u, Task task) {
  if (task == Task::Regression) return u;
  return -std::max(0.0, 1.0 - u);
}

ProblemEncoding ProblemEncoding::make(Task task,
                                      const std::vector<std::vector<double>>& columns,
                                      std::vector<double> labels, double rho,
                                      double lambda) {
  ProblemEncoding enc;
  enc.task = task;
  enc.d = static_cast<int>(columns.size());
  enc.n = static_cast<int>(labels.size());
  enc.rho = rho;
  enc.lambda = lambda;
  enc.labels = std::move(labels);
  if (task == Task::Classification) {
    for (double y : enc.labels) {
      if (y != 1.0 && y != -1.0) {
        throw std::invalid_argument("classification labels must be +1/-1");
      }
    }
  }
  enc.alpha_hat.resize(static_cast<std::size_t>(enc.n) * enc.d);
  for (int j = 0; j < enc.d; ++j) {
    if (static_cast<int>(columns[j].size()) != enc.n) {
      throw std::invalid_argument("feature column length mismatch");
    }
    for (int i = 0; i < enc.n; ++i) {
      double v = columns[j][i];
      enc.alpha_hat[static_cast<std::size_t>(j) * enc.n + i] =
          task == Task::Classification ? enc.labels[i] * v : v;
    }
  }
  return enc;
}

ModelState ModelState::zero(int d) {
  ModelState state;
  state.eta.assign(d, 0.0);
  return state;
}

std::vector<double> margins(const ModelState& state, const ProblemEncoding& enc,
                            const DiscretizedDataset& ds) {
  std::vector<double> m(enc.n);
  for (int i = 0; i < enc.n; ++i) m[i] = enc.beta(i) * state.intercept + enc.gamma(i);
  for (int j = 0; j < enc.d; ++j) {
    const double w = state.eta[j];
    if (w == 0.0) continue;
    auto col = enc.alpha_hat_col(j);
    for (int i = 0; i < enc.n; ++i) m[i] += w * col[i];
  }
  for (std::size_t k = 0; k < state.rules.size(); ++k) {
    const double w = state.zeta[k];
    if (w == 0.0) continue;
    for (int i = 0; i < enc.n; ++i) {
      if (evaluate(state.rules[k], ds.row(i))) m[i] += enc.beta(i) * w;
    }
  }
  return m;
}

double primal_value(const ModelState& state, const ProblemEncoding& enc,
                    const DiscretizedDataset& ds) {
  std::vector<double> m = margins(state, enc, ds);
  double value = 0.0;
  for (int i = 0; i < enc.n; ++i) value += loss_value(m[i], enc.task);
  for (double e : state.eta) value += enc.rho * std::abs(e);
  for (double z : state.zeta) value += enc.lambda * std::abs(z);
  return value;
}

double dual_value(std::span<const double> theta, const ProblemEncoding& enc) {
  double value = 0.0;
  for (int i = 0; i < enc.n; ++i) {
    value += -0.5 * theta[i] * theta[i] + enc.delta(i) * theta[i];
  }
  return value;
}

namespace {

double intercept_dot(const std::vector<double>& theta, const ProblemEncoding& enc) {
  double dot = 0.0;
  for (int i = 0; i < enc.n; ++i) dot += enc.beta(i) * theta[i];
  return dot;
}

void project_intercept(std::vector<double>& theta, const ProblemEncoding& enc) {
  const double shift = intercept_dot(theta, enc) / enc.n;  // ||beta||^2 = n
  for (int i = 0; i < enc.n; ++i) theta[i] -= shift * enc.beta(i);
}

// Exact projection onto {t : beta't = 0, t >= 0}. With beta_i in {-1,+1} the
// projection is t_i = max(0, v_i - mu*beta_i) where mu solves the monotone
// piecewise-linear balance beta't(mu) = 0; the root comes from a breakpoint
// scan, so no alternating iteration is needed.
void project_nonneg_intercept(std::vector<double>& theta, const ProblemEncoding& enc) {
  const int n = enc.n;
  std::vector<std::pair<double, double>> bps(n);  // (breakpoint, beta)
  double a = 0.0;  // sum of active v_i, sign-split
  double b = 0.0;  // active count
  for (int i = 0; i < n; ++i) {
    const double beta = enc.beta(i);
    bps[i] = {beta * theta[i], beta};
    if (beta > 0.0) {  // active at mu -> -inf
      a += theta[i];
      b += 1.0;
    }
  }
  std::sort(bps.begin(), bps.end());
  double mu = 0.0;
  bool found = false;
  for (const auto& [bp, beta] : bps) {
    if (a - b * bp <= 0.0) {  // balance crosses zero in this segment
      mu = b > 0.0 ? a / b : bp;
      found = true;
      break;
    }
    if (beta > 0.0) {  // positive sample leaves the active set
      a -= bp;
      b -= 1.0;
    } else {  // negative sample enters; its value is -bp
      a += bp;
      b += 1.0;
    }
  }
  if (!found) mu = b > 0.0 ? a / b : (bps.empty() ? 0.0 : bps.back().first);
  for (int i = 0; i < n; ++i) theta[i] = std::max(0.0, theta[i] - mu * enc.beta(i));
}

}  // namespace

std::vector<double> dual_point_from_margins(std::span<const double> margin,
                                            const ProblemEncoding& enc,
                                            const RuleMaxFn& rule_max) {
  std::vector<double> theta(enc.n);
  for (int i = 0; i < enc.n; ++i) theta[i] = -loss_grad(margin[i], enc.task);

  if (enc.task == Task::Classification) {
    project_nonneg_intercept(theta, enc);
  } else {
    project_intercept(theta, enc);
  }

  // Shrink until every linear and rule constraint holds. Shrinking preserves
  // beta'theta = 0 and nonnegativity. A small absolute slack keeps the exact
  // unregularized limit usable despite floating-point residue.
  double theta_norm = 0.0;
  for (double t : theta) theta_norm += t * t;
  theta_norm = std::sqrt(theta_norm);

  double max_linear = 0.0;
  double max_col_norm = 0.0;
  for (int j = 0; j < enc.d; ++j) {
    auto col = enc.alpha_hat_col(j);
    double dot = 0.0, sq = 0.0;
    for (int i = 0; i < enc.n; ++i) {
      dot += col[i] * theta[i];
      sq += col[i] * col[i];
    }
    max_linear = std::max(max_linear, std::abs(dot));
    max_col_norm = std::max(max_col_norm, std::sqrt(sq));
  }
  const double slack = 1e-12 * theta_norm * std::max(1.0, max_col_norm);

  double scale = 1.0;
  if (max_linear > enc.rho + slack) scale = std::min(scale, enc.rho / max_linear);

  std::vector<double> weights(enc.n);
  for (int i = 0; i < enc.n; ++i) weights[i] = enc.beta(i) * theta[i];
  const double max_rule = rule_max(weights, enc.lambda);
  if (max_rule > enc.lambda + slack) scale = std::min(scale, enc.lambda / max_rule);

  if (scale < 1.0) {
    for (double& t : theta) t *= scale;
  }
  return theta;
}

std::vector<double> dual_feasible_point(const ModelState& state, const ProblemEncoding& enc,
                                        const DiscretizedDataset& ds,
                                        const RuleMaxFn& rule_max) {
  std::vector<double> m = margins(state, enc, ds);
  return dual_point_from_margins(m, enc, rule_max);
}

}  // namespace sorf
