// Compares the serial reference tree kernels against the OpenMP ones on a
// synthetic regression set: exact rule-correlation max and survivor
// screening, identical results required, wall times reported.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sorf/discretizer.hpp"
#include "sorf/encoding.hpp"
#include "sorf/path.hpp"
#include "sorf/screening.hpp"

namespace {

double now() {
#ifdef _OPENMP
  return omp_get_wtime();
#else
  return 0.0;
#endif
}

struct Bench {
  sorf::DiscretizedDataset ds;
  sorf::ProblemEncoding enc;
};

Bench make_bench(int n, int d, int levels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<std::vector<double>> columns(d, std::vector<double>(n));
  for (auto& col : columns) {
    for (double& v : col) v = unit(rng);
  }
  Bench bench;
  bench.ds = sorf::discretize_quantile(columns, levels);
  std::vector<double> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = columns[0][i] - 0.5 * columns[1][i] + noise(rng);
    if (bench.ds.level(i, 2) >= levels / 2 && bench.ds.level(i, 3) <= levels / 2) {
      labels[i] += 2.0;
    }
  }
  double mean = 0.0;
  for (double y : labels) mean += y;
  mean /= n;
  double var = 0.0;
  for (double y : labels) var += (y - mean) * (y - mean);
  const double scale = std::sqrt(var / n);
  for (double& y : labels) y = (y - mean) / scale;
  bench.enc = sorf::ProblemEncoding::make(sorf::Task::Regression, columns, labels, 1.0, 1.0);
  return bench;
}

}  // namespace

int main(int argc, char** argv) {
  int n = 2000, d = 6, levels = 5, repeats = 3;
  for (int a = 1; a < argc; ++a) {
    if (!std::strcmp(argv[a], "--smoke")) {
      n = 200;
      d = 4;
      levels = 4;
      repeats = 1;
    } else if (!std::strcmp(argv[a], "--n") && a + 1 < argc) {
      n = std::stoi(argv[++a]);
    } else if (!std::strcmp(argv[a], "--d") && a + 1 < argc) {
      d = std::stoi(argv[++a]);
    } else if (!std::strcmp(argv[a], "--levels") && a + 1 < argc) {
      levels = std::stoi(argv[++a]);
    } else if (!std::strcmp(argv[a], "--repeats") && a + 1 < argc) {
      repeats = std::stoi(argv[++a]);
    } else {
      std::fprintf(stderr, "usage: %s [--smoke] [--n N] [--d D] [--levels S] [--repeats R]\n",
                   argv[0]);
      return 1;
    }
  }

  Bench bench = make_bench(n, d, levels, 7);
  const auto& ds = bench.ds;
  const auto& enc = bench.enc;

  std::vector<double> weights(enc.n);
  const sorf::InterceptOnly base = sorf::intercept_only_optimum(enc);
  for (int i = 0; i < enc.n; ++i) weights[i] = enc.beta(i) * base.theta[i];

  sorf::ScreenConfig serial_cfg;
  serial_cfg.threads = 1;
  sorf::ScreenConfig parallel_cfg;
  parallel_cfg.threads = 0;  // all cores

  std::printf("tree kernels, n=%d d=%d levels=%d\n", n, d, levels);

  double serial_max = 0.0, parallel_max = 0.0;
  double t_serial = 0.0, t_parallel = 0.0;
  for (int r = 0; r < repeats; ++r) {
    double t0 = now();
    serial_max = sorf::max_rule_correlation_serial(ds, weights, 0.0, serial_cfg);
    t_serial += now() - t0;
    t0 = now();
    parallel_max = sorf::max_rule_correlation(ds, weights, 0.0, parallel_cfg);
    t_parallel += now() - t0;
  }
  if (serial_max != parallel_max) {
    std::fprintf(stderr, "FAIL: correlation max differs (%.17g vs %.17g)\n", serial_max,
                 parallel_max);
    return 1;
  }
  std::printf("  max-correlation  serial %8.4fs  parallel %8.4fs  speedup %.2fx\n",
              t_serial / repeats, t_parallel / repeats,
              t_parallel > 0 ? t_serial / t_parallel : 0.0);

  // Screening sphere at a mid-path penalty with the cold feasible pair.
  const double lmax = std::max(serial_max, [&] {
    double feat = 0.0;
    for (int j = 0; j < enc.d; ++j) {
      double dot = 0.0;
      auto col = enc.alpha_hat_col(j);
      for (int i = 0; i < enc.n; ++i) dot += col[i] * base.theta[i];
      feat = std::max(feat, std::abs(dot));
    }
    return feat;
  }());
  const double lambda = 0.3 * lmax;
  sorf::ModelState cold = sorf::ModelState::zero(enc.d);
  cold.intercept = base.intercept;
  cold.theta = base.theta;
  sorf::ProblemEncoding enc_l = enc;
  enc_l.rho = enc_l.lambda = lambda;
  cold.primal = sorf::primal_value(cold, enc_l, ds);
  cold.dual = sorf::dual_value(cold.theta, enc_l);
  const sorf::SafeSphere sp = sorf::sphere(cold, enc_l);

  sorf::RuleSet serial_rules, parallel_rules;
  t_serial = t_parallel = 0.0;
  sorf::ScreenStats serial_stats, parallel_stats;
  for (int r = 0; r < repeats; ++r) {
    double t0 = now();
    serial_rules = sorf::screen_rules_serial(ds, sp, enc_l, lambda, serial_cfg, &serial_stats);
    t_serial += now() - t0;
    t0 = now();
    parallel_rules = sorf::screen_rules(ds, sp, enc_l, lambda, parallel_cfg, &parallel_stats);
    t_parallel += now() - t0;
  }
  if (serial_rules != parallel_rules) {
    std::fprintf(stderr, "FAIL: survivor sets differ (%zu vs %zu)\n", serial_rules.size(),
                 parallel_rules.size());
    return 1;
  }
  std::printf("  screen-survivors serial %8.4fs  parallel %8.4fs  speedup %.2fx"
              "  (survivors %zu, visited %llu serial / %llu parallel)\n",
              t_serial / repeats, t_parallel / repeats,
              t_parallel > 0 ? t_serial / t_parallel : 0.0, serial_rules.size(),
              static_cast<unsigned long long>(serial_stats.visited),
              static_cast<unsigned long long>(parallel_stats.visited));
  std::printf("ok\n");
  return 0;
}
